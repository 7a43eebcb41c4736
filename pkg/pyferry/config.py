"""
Experiment configuration.

A configuration is a single JSON document. Every optional field has a
documented default (see docs/configuration.rst). The document is checked
against pydantic schemas that reject unknown keys; cross-field rules are
checked while building the domain objects. Every error names the offending
field.
"""
import enum
import json
import os
from dataclasses import dataclass, field, replace
from typing import Annotated, Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pydantic
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    StrictBool,
    StrictInt,
    StrictStr,
    ValidationInfo,
    field_validator,
)

from .errors import ConfigError, ValidationError
from .model import (
    LAYOUT_SPACING,
    FlowSpec,
    NetworkSpec,
    Point,
    RateForm,
    RateModel,
)

__all__ = [
    "SchedulerKind",
    "SweepVariable",
    "SchedulerConfig",
    "SweepConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "DEFAULT_HORIZON_EPOCHS",
    "DEFAULT_WARMUP_FRACTION",
    "DEFAULT_OUTPUT_PATH",
    "MIN_HORIZON_EPOCHS",
]

DEFAULT_HORIZON_EPOCHS = 200
DEFAULT_WARMUP_FRACTION = 0.1
DEFAULT_OUTPUT_PATH = "results.csv"
DEFAULT_DENOM_CAP = 1000
MIN_HORIZON_EPOCHS = 4

PLACEMENT_FLOW1_SOURCE = "flow1_source"
PLACEMENT_RANDOM = "random"


class SchedulerKind(enum.Enum):
    CBMF = "cbmf"
    STATIC = "static"
    ORACLE = "oracle"
    BRUTE_FORCE = "brute_force"


class SweepVariable(enum.Enum):
    LAMBDA_SCALE = "lambda_scale"
    VELOCITY = "v"
    EPOCH_LEN = "T"


@dataclass(frozen=True)
class SchedulerConfig:
    kind: SchedulerKind = SchedulerKind.CBMF
    #: Schedule program file of the static scheduler.
    program: Optional[str] = None
    #: Rate vector the oracle program serves; None means the flows' rates.
    oracle_lambda: Optional[Tuple[float, ...]] = None
    denom_cap: int = DEFAULT_DENOM_CAP
    sink_slack_epochs: int = 0
    transit_compensation: bool = True

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is SchedulerKind.STATIC:
            data["program"] = self.program
        elif self.kind is SchedulerKind.ORACLE:
            data["lambda"] = None if self.oracle_lambda is None else list(self.oracle_lambda)
            data["denom_cap"] = self.denom_cap
            data["sink_slack_epochs"] = self.sink_slack_epochs
            data["transit_compensation"] = self.transit_compensation
        return data


@dataclass(frozen=True)
class SweepConfig:
    variable: SweepVariable
    values: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"variable": self.variable.value, "values": list(self.values)}


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkSpec
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    horizon_epochs: int = DEFAULT_HORIZON_EPOCHS
    sweep: Optional[SweepConfig] = None
    output_path: str = DEFAULT_OUTPUT_PATH
    warmup_fraction: float = DEFAULT_WARMUP_FRACTION
    workers: int = 1
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        " The resolved configuration, every default filled in. "
        spec = self.network
        return {
            "network": {
                "flows": [
                    {"id": f.id, "lambda": f.lam, "src": list(f.src.as_tuple()), "sink": list(f.sink.as_tuple())}
                    for f in spec.flows
                ],
                "n_robots": spec.n_robots,
                "velocity": spec.velocity,
                "epoch_len": spec.epoch_len,
                "rate_model": {
                    "r_max": spec.rate_model.r_max,
                    "c": spec.rate_model.c,
                    "eta": spec.rate_model.eta,
                    "form": spec.rate_model.form.value,
                },
                "initial_robot_positions": [list(p.as_tuple()) for p in spec.initial_robot_positions],
            },
            "scheduler": self.scheduler.to_dict(),
            "horizon_epochs": self.horizon_epochs,
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
            "output_path": self.output_path,
            "warmup_fraction": self.warmup_fraction,
            "workers": self.workers,
            "seed": self.seed,
        }

    def with_overrides(
        self,
        output_path: Optional[str] = None,
        horizon_epochs: Optional[int] = None,
        workers: Optional[int] = None,
    ) -> "ExperimentConfig":
        cfg = self
        if output_path is not None:
            cfg = replace(cfg, output_path=output_path)
        if horizon_epochs is not None:
            if horizon_epochs < MIN_HORIZON_EPOCHS:
                raise ConfigError("must be >= %d" % MIN_HORIZON_EPOCHS, field="horizon_epochs")
            cfg = replace(cfg, horizon_epochs=horizon_epochs)
        if workers is not None:
            cfg = replace(cfg, workers=max(1, workers))
        return cfg


_MISSING_FIELD = "required field is missing"


def _reject_non_numbers(value: Any) -> Any:
    # JSON true/false must not pass as 1/0, nor "1.5" as a number.
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("expected a number, got %r" % (value,))
    return value


Number = Annotated[float, BeforeValidator(_reject_non_numbers)]
NonNegative = Annotated[Number, Field(ge=0)]
PointValue = Tuple[Number, Number]


class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class _FlowSchema(_Schema):
    id: Optional[StrictInt] = None
    lam: NonNegative = Field(alias="lambda")
    src: Optional[PointValue] = None
    sink: Optional[PointValue] = None
    distance: Optional[NonNegative] = None

    @field_validator("distance")
    @classmethod
    def _distance_or_points(cls, value: Optional[float], info: ValidationInfo) -> Optional[float]:
        if value is not None and (info.data.get("src") is not None or info.data.get("sink") is not None):
            raise ValueError("give either 'distance' or 'src'/'sink', not both")
        return value


_RATE_DEFAULTS = RateModel()


class _RateModelSchema(_Schema):
    form: RateForm = _RATE_DEFAULTS.form
    r_max: Number = _RATE_DEFAULTS.r_max
    c: Number = _RATE_DEFAULTS.c
    eta: Number = _RATE_DEFAULTS.eta


class _NetworkSchema(_Schema):
    flows: List[_FlowSchema] = Field(min_length=1)
    n_robots: Optional[StrictInt] = None
    velocity: Number
    epoch_len: StrictInt
    rate_model: _RateModelSchema = Field(default_factory=_RateModelSchema)
    initial_robot_positions: Union[str, List[PointValue]] = PLACEMENT_FLOW1_SOURCE

    @field_validator("n_robots")
    @classmethod
    def _at_most_two_per_flow(cls, value: Optional[int], info: ValidationInfo) -> Optional[int]:
        flows = info.data.get("flows")
        if value is not None and flows and value > 2 * len(flows):
            raise ValueError("N ≤ 2K violated: N=%d, K=%d" % (value, len(flows)))
        return value

    @field_validator("initial_robot_positions")
    @classmethod
    def _known_placement(cls, value: Any) -> Any:
        if isinstance(value, str) and value not in (PLACEMENT_FLOW1_SOURCE, PLACEMENT_RANDOM):
            raise ValueError("expected %r, %r or a list of points" % (PLACEMENT_FLOW1_SOURCE, PLACEMENT_RANDOM))
        return value


#: Scheduler keys that only the oracle scheduler reads.
_ORACLE_KEYS = ("lam", "denom_cap", "sink_slack_epochs", "transit_compensation")


class _SchedulerSchema(_Schema):
    kind: SchedulerKind = SchedulerKind.CBMF
    program: Optional[StrictStr] = None
    lam: Optional[List[NonNegative]] = Field(default=None, alias="lambda")
    denom_cap: StrictInt = Field(default=DEFAULT_DENOM_CAP, ge=1)
    sink_slack_epochs: StrictInt = Field(default=0, ge=0)
    transit_compensation: StrictBool = True


class _SweepSchema(_Schema):
    variable: SweepVariable
    values: List[Number] = Field(min_length=1)

    @field_validator("values")
    @classmethod
    def _values_fit_the_variable(cls, values: List[float], info: ValidationInfo) -> List[float]:
        variable = info.data.get("variable")
        if variable is SweepVariable.EPOCH_LEN and any(int(x) != x or x < 1 for x in values):
            raise ValueError("epoch lengths must be integers ≥ 1")
        if variable is SweepVariable.VELOCITY and any(x <= 0 for x in values):
            raise ValueError("velocities must be > 0")
        if variable is SweepVariable.LAMBDA_SCALE and any(x < 0 for x in values):
            raise ValueError("arrival rate scales must be ≥ 0")
        return values


class _ExperimentSchema(_Schema):
    network: _NetworkSchema
    scheduler: Optional[_SchedulerSchema] = None
    horizon_epochs: StrictInt = Field(default=DEFAULT_HORIZON_EPOCHS, ge=MIN_HORIZON_EPOCHS)
    sweep: Optional[_SweepSchema] = None
    output_path: StrictStr = DEFAULT_OUTPUT_PATH
    warmup_fraction: Number = Field(default=DEFAULT_WARMUP_FRACTION, ge=0, lt=1)
    workers: StrictInt = Field(default=1, ge=1)
    seed: StrictInt = 0


def _field_name(loc: Sequence[Union[str, int]]) -> str:
    " ('network', 'flows', 1, 'lambda') -> 'network.flows[1].lambda' "
    name = ""
    for part in loc:
        if isinstance(part, int):
            name += "[%d]" % part
        else:
            name = "%s.%s" % (name, part) if name else str(part)
    return name or "<root>"


def _schema_error(e: pydantic.ValidationError, source: Optional[str]) -> ConfigError:
    error = e.errors()[0]
    if error["type"] == "missing":
        message = _MISSING_FIELD
    elif error["type"] == "extra_forbidden":
        message = "unknown key"
    elif error["type"] == "value_error":
        message = str(error["ctx"]["error"])
    else:
        message = error["msg"]
    return ConfigError(message, path=source, field=_field_name(error["loc"]))


def _point(value: Tuple[float, float], where: str, source: Optional[str]) -> Point:
    try:
        return Point(*value)
    except ValidationError as e:
        raise ConfigError(str(e), path=source, field=where)


def _flows(schema: _NetworkSchema, source: Optional[str]) -> Tuple[FlowSpec, ...]:
    flows = []
    for index, item in enumerate(schema.flows):
        where = "network.flows[%d]" % index
        if item.id is not None and item.id != index + 1:
            raise ConfigError("flow ids must be contiguous from 1, expected %d" % (index + 1),
                              path=source, field=where + ".id")
        if item.distance is not None:
            y = LAYOUT_SPACING * (index + 1)
            src, sink = Point(0.0, y), Point(item.distance, y)
        else:
            if item.src is None or item.sink is None:
                missing = "src" if item.src is None else "sink"
                raise ConfigError(_MISSING_FIELD, path=source, field="%s.%s" % (where, missing))
            src = _point(item.src, where + ".src", source)
            sink = _point(item.sink, where + ".sink", source)
        flows.append(FlowSpec(id=index + 1, src=src, sink=sink, lam=item.lam))
    return tuple(flows)


def _random_positions(flows: Sequence[FlowSpec], n_robots: int, seed: int) -> Tuple[Point, ...]:
    nodes = np.array([p.as_tuple() for f in flows for p in (f.src, f.sink)])
    low, high = nodes.min(axis=0), nodes.max(axis=0)
    rng = np.random.default_rng(seed)
    return tuple(Point(float(x), float(y)) for x, y in rng.uniform(low, high, size=(n_robots, 2)))


def _network_spec(schema: _NetworkSchema, seed: int, source: Optional[str]) -> NetworkSpec:
    flows = _flows(schema, source)
    n_robots = 2 * len(flows) if schema.n_robots is None else schema.n_robots

    placement = schema.initial_robot_positions
    positions: Tuple[Point, ...]
    if placement == PLACEMENT_FLOW1_SOURCE:
        positions = (flows[0].src,) * n_robots
    elif placement == PLACEMENT_RANDOM:
        positions = _random_positions(flows, n_robots, seed)
    else:
        positions = tuple(
            _point(p, "network.initial_robot_positions[%d]" % j, source) for j, p in enumerate(placement))

    try:
        rate_model = RateModel(**schema.rate_model.model_dump())
    except ValidationError as e:
        raise ConfigError(str(e), path=source, field="network.rate_model")
    try:
        return NetworkSpec(
            flows=flows,
            n_robots=n_robots,
            velocity=schema.velocity,
            epoch_len=schema.epoch_len,
            rate_model=rate_model,
            initial_robot_positions=positions,
        )
    except ValidationError as e:
        raise ConfigError(str(e), path=source, field="network")


def _resolve(path: str, base_dir: Optional[str]) -> str:
    if base_dir is None or os.path.isabs(path):
        return path
    return os.path.join(base_dir, path)


def _scheduler_config(
    schema: Optional[_SchedulerSchema], n_flows: int, base_dir: Optional[str], source: Optional[str]
) -> SchedulerConfig:
    if schema is None:
        return SchedulerConfig()

    def error(name: str, message: str) -> ConfigError:
        return ConfigError(message, path=source, field="scheduler." + name)

    kind = schema.kind
    given = schema.model_fields_set
    if kind is not SchedulerKind.STATIC and "program" in given:
        raise error("program", "only the static scheduler reads a program")
    if kind is not SchedulerKind.ORACLE:
        for name in _ORACLE_KEYS:
            if name in given:
                raise error(_SchedulerSchema.model_fields[name].alias or name,
                            "only the oracle scheduler reads this key")

    if kind is SchedulerKind.STATIC:
        if schema.program is None:
            raise error("program", _MISSING_FIELD)
        return SchedulerConfig(kind=kind, program=_resolve(schema.program, base_dir))
    if kind is SchedulerKind.ORACLE:
        if schema.lam is not None and len(schema.lam) != n_flows:
            raise error("lambda", "expected %d nonnegative rates" % n_flows)
        return SchedulerConfig(
            kind=kind,
            oracle_lambda=None if schema.lam is None else tuple(schema.lam),
            denom_cap=schema.denom_cap,
            sink_slack_epochs=schema.sink_slack_epochs,
            transit_compensation=schema.transit_compensation,
        )
    return SchedulerConfig(kind=kind)


def parse_config(data: Any, source: Optional[str] = None) -> ExperimentConfig:
    """
    Build an ExperimentConfig from an already decoded JSON document.
    """
    try:
        schema = _ExperimentSchema.model_validate(data)
    except pydantic.ValidationError as e:
        raise _schema_error(e, source) from e

    base_dir = os.path.dirname(os.path.abspath(source)) if source else None
    spec = _network_spec(schema.network, schema.seed, source)
    sweep = None
    if schema.sweep is not None:
        sweep = SweepConfig(variable=schema.sweep.variable, values=tuple(schema.sweep.values))

    return ExperimentConfig(
        network=spec,
        scheduler=_scheduler_config(schema.scheduler, spec.n_flows, base_dir, source),
        horizon_epochs=schema.horizon_epochs,
        sweep=sweep,
        output_path=_resolve(schema.output_path, base_dir),
        warmup_fraction=schema.warmup_fraction,
        workers=schema.workers,
        seed=schema.seed,
    )


def load_config(path: str, seed: Optional[int] = None) -> ExperimentConfig:
    """
    Read and validate a configuration file. `seed` overrides the file's
    seed (it only matters for random robot placement).
    """
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError("cannot read configuration: %s" % e.strerror, path=path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path=path, line=e.lineno, column=e.colno)
    if seed is not None and isinstance(data, dict):
        data = dict(data, seed=seed)
    return parse_config(data, source=path)

