import json

import pytest

from pyferry.config import (
    DEFAULT_HORIZON_EPOCHS,
    ExperimentConfig,
    SchedulerKind,
    SweepVariable,
    load_config,
    parse_config,
)
from pyferry.errors import ConfigError
from pyferry.model import LAYOUT_SPACING, Point, RateForm


def test_defaults(basic_config):
    del basic_config["horizon_epochs"], basic_config["warmup_fraction"]
    cfg = parse_config(basic_config)
    assert cfg.network.n_robots == 4
    assert cfg.network.rate_model.form is RateForm.INVERSE_POLYNOMIAL
    assert cfg.network.initial_robot_positions == (Point(0.0, LAYOUT_SPACING),) * 4
    assert cfg.scheduler.kind is SchedulerKind.CBMF
    assert cfg.horizon_epochs == DEFAULT_HORIZON_EPOCHS
    assert cfg.sweep is None
    assert cfg.output_path == "results.csv"
    assert cfg.warmup_fraction == 0.1
    assert cfg.workers == 1


def test_distance_and_point_flows(basic_config):
    basic_config["network"]["flows"][1] = {"id": 2, "lambda": 0.2, "src": [1, 2], "sink": [3, 4]}
    cfg = parse_config(basic_config)
    first, second = cfg.network.flows
    assert first.src == Point(0.0, LAYOUT_SPACING) and first.sink == Point(5.0, LAYOUT_SPACING)
    assert second.src == Point(1.0, 2.0) and second.sink == Point(3.0, 4.0)
    assert second.lam == 0.2


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda c: c["network"]["flows"][1].update(**{"lambda": -1}), "network.flows[1].lambda"),
        (lambda c: c["network"]["flows"][0].update(id=3), "network.flows[0].id"),
        (lambda c: c["network"]["flows"][0].update(src=[0, 0]), "network.flows[0].distance"),
        (lambda c: c["network"].update(n_robots=5), "network.n_robots"),
        (lambda c: c["network"].pop("velocity"), "network.velocity"),
        (lambda c: c["network"].update(epoch_len=2.5), "network.epoch_len"),
        (lambda c: c["network"].update(flows=[]), "network.flows"),
        (lambda c: c["network"].update(rate_model={"form": "cubic"}), "network.rate_model.form"),
        (lambda c: c["network"].update(rate_model={"r_max": 0}), "network.rate_model"),
        (lambda c: c["network"].update(colour="red"), "network.colour"),
        (lambda c: c.update(horizon_epochs=3), "horizon_epochs"),
        (lambda c: c.update(warmup_fraction=1.0), "warmup_fraction"),
        (lambda c: c.update(workers=0), "workers"),
        (lambda c: c.update(scheduler={"kind": "magic"}), "scheduler.kind"),
        (lambda c: c.update(scheduler={"kind": "static"}), "scheduler.program"),
        (lambda c: c.update(scheduler={"kind": "oracle", "lambda": [0.1]}), "scheduler.lambda"),
        (lambda c: c.update(scheduler={"kind": "cbmf", "denom_cap": 10}), "scheduler.denom_cap"),
        (lambda c: c.update(sweep={"variable": "N", "values": [1]}), "sweep.variable"),
        (lambda c: c.update(sweep={"variable": "T", "values": [10.5]}), "sweep.values"),
        (lambda c: c.update(sweep={"variable": "v", "values": []}), "sweep.values"),
        (lambda c: c.update(unknown=1), "unknown"),
        (lambda c: c["network"]["flows"][0].update(**{"lambda": True}), "network.flows[0].lambda"),
        (lambda c: c["network"]["flows"][0].pop("lambda"), "network.flows[0].lambda"),
        (lambda c: c.update(scheduler={"kind": "oracle", "lambda": [0.1, -0.2]}), "scheduler.lambda[1]"),
        (lambda c: c.update(scheduler={"kind": "oracle", "transit_compensation": "yes"}),
         "scheduler.transit_compensation"),
        (lambda c: c.update(seed="7"), "seed"),
    ],
)
def test_errors_name_the_field(basic_config, mutate, field):
    mutate(basic_config)
    with pytest.raises(ConfigError) as info:
        parse_config(basic_config, source="experiment.json")
    assert info.value.field == field
    assert str(info.value).startswith("experiment.json: %s: " % field)


def test_robot_count_error_names_the_invariant(basic_config):
    basic_config["network"]["n_robots"] = 5
    with pytest.raises(ConfigError, match="N ≤ 2K"):
        parse_config(basic_config)


def test_syntax_errors_carry_line_and_column(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "network": {\n    "flows": [,]\n  }\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(str(path))
    assert info.value.path == str(path)
    assert info.value.line == 3
    assert info.value.column is not None
    assert "line 3" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.json"))


def test_paths_are_relative_to_the_config(basic_config, write_json, tmp_path):
    basic_config["scheduler"] = {"kind": "static", "program": "program.json"}
    basic_config["output_path"] = "out/results.csv"
    cfg = load_config(write_json("experiment.json", basic_config))
    assert cfg.scheduler.program == str(tmp_path / "program.json")
    assert cfg.output_path == str(tmp_path / "out" / "results.csv")


def test_random_placement_depends_only_on_the_seed(basic_config, write_json):
    basic_config["network"]["initial_robot_positions"] = "random"
    path = write_json("experiment.json", basic_config)
    first, again, other = load_config(path), load_config(path), load_config(path, seed=1)
    assert first.network.initial_robot_positions == again.network.initial_robot_positions
    assert first.network.initial_robot_positions != other.network.initial_robot_positions
    assert other.seed == 1
    for p in first.network.initial_robot_positions:
        assert 0.0 <= p.x <= 10.0 and LAYOUT_SPACING <= p.y <= 2 * LAYOUT_SPACING


def test_explicit_positions(basic_config):
    basic_config["network"]["n_robots"] = 2
    basic_config["network"]["initial_robot_positions"] = [[0, 50], [5, 50]]
    cfg = parse_config(basic_config)
    assert cfg.network.initial_robot_positions == (Point(0, 50), Point(5, 50))
    basic_config["network"]["initial_robot_positions"] = [[0, 50]]
    with pytest.raises(ConfigError):
        parse_config(basic_config)


def test_oracle_and_sweep(basic_config):
    basic_config["scheduler"] = {"kind": "oracle", "denom_cap": 20, "transit_compensation": False}
    basic_config["sweep"] = {"variable": "lambda_scale", "values": [0.5, 1, 2]}
    cfg = parse_config(basic_config)
    assert cfg.scheduler.kind is SchedulerKind.ORACLE
    assert cfg.scheduler.oracle_lambda is None
    assert cfg.scheduler.denom_cap == 20
    assert cfg.scheduler.transit_compensation is False
    assert cfg.sweep.variable is SweepVariable.LAMBDA_SCALE
    assert cfg.sweep.values == (0.5, 1.0, 2.0)


def test_resolved_config_parses_back(basic_config):
    basic_config["scheduler"] = {"kind": "oracle", "lambda": [0.1, 0.1]}
    basic_config["sweep"] = {"variable": "T", "values": [50, 100]}
    cfg = parse_config(basic_config)
    data = json.loads(json.dumps(cfg.to_dict()))
    assert parse_config(data) == cfg


def test_overrides(basic_config):
    cfg = parse_config(basic_config)
    changed = cfg.with_overrides(output_path="other.csv", horizon_epochs=50, workers=0)
    assert isinstance(changed, ExperimentConfig)
    assert (changed.output_path, changed.horizon_epochs, changed.workers) == ("other.csv", 50, 1)
    assert cfg.with_overrides() == cfg
    with pytest.raises(ConfigError):
        cfg.with_overrides(horizon_epochs=1)


def test_error_messages_follow_the_problem(basic_config):
    basic_config["network"]["flows"][0].pop("lambda")
    with pytest.raises(ConfigError, match="required field is missing"):
        parse_config(basic_config)
    basic_config["network"]["flows"][0]["lambda"] = 0.1
    basic_config["network"]["flows"][0]["colour"] = "red"
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(basic_config)


def test_document_must_be_an_object():
    with pytest.raises(ConfigError) as info:
        parse_config([1, 2, 3])
    assert info.value.field == "<root>"
