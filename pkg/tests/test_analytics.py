import math
from types import SimpleNamespace

import numpy as np
import pytest

from pyferry.analytics import (
    DelayCase,
    closed_form_delay,
    cumulative_service,
    lambda_hat_max,
    lambda_max,
    little_delay,
    one_flow_spec,
    simulate_delay,
    solve_t_star,
)
from pyferry.errors import PreconditionError, ValidationError
from pyferry.model import Point, RateForm, RateModel

CONSTANT = RateModel(r_max=1.0, form=RateForm.CONSTANT)

# Integral of 1 / (1 + (10 - 2t)^2) over [0, 5], i.e. atan(10) / 2.
TRANSIT_SERVICE = math.atan(10.0) / 2


def test_cumulative_service(rate_model):
    assert cumulative_service(0.0, 10.0, 2.0, rate_model) == 0.0
    assert cumulative_service(5.0, 10.0, 2.0, rate_model) == pytest.approx(TRANSIT_SERVICE, rel=1e-9)
    assert cumulative_service(4.0, 10.0, 2.0, CONSTANT) == pytest.approx(4.0)


def test_lambda_hat_max(rate_model):
    assert lambda_hat_max(0.0, 2.0, 10.0, rate_model) == 0.0
    assert lambda_hat_max(10.0, 2.0, 10.0, CONSTANT) == pytest.approx(0.5)
    assert lambda_hat_max(10.0, 2.0, 10.0, rate_model) == pytest.approx(TRANSIT_SERVICE / 10, rel=1e-9)


def test_lambda_max(rate_model):
    assert lambda_max(0.0, 2.0, 10.0, rate_model) == pytest.approx(1.0)
    assert lambda_max(10.0, 2.0, 10.0, CONSTANT) == pytest.approx(1.0)
    assert lambda_max(10.0, 2.0, 10.0, rate_model) == pytest.approx((TRANSIT_SERVICE + 5.0) / 10, rel=1e-9)


def test_transit_limit_never_exceeds_the_stability_limit():
    rng = np.random.default_rng(31)
    for _ in range(200):
        epoch_len = float(rng.uniform(1, 100))
        v = float(rng.uniform(0.1, 10))
        d = float(rng.uniform(0, 0.99)) * v * epoch_len
        model = RateModel(
            r_max=float(rng.uniform(0.1, 5)), c=float(rng.uniform(0.1, 5)), eta=float(rng.uniform(0, 4)),
            form=RateForm.CONSTANT if rng.random() < 0.2 else RateForm.INVERSE_POLYNOMIAL)
        assert lambda_hat_max(d, v, epoch_len, model) <= lambda_max(d, v, epoch_len, model) + 1e-12


@pytest.mark.parametrize("func", [lambda_hat_max, lambda_max])
def test_robot_must_cross_within_an_epoch(rate_model, func):
    with pytest.raises(PreconditionError):
        func(12.0, 1.0, 10.0, rate_model)
    with pytest.raises(PreconditionError):
        func(10.0, 1.0, 10.0, rate_model)
    with pytest.raises(ValidationError):
        func(-1.0, 1.0, 10.0, rate_model)


def test_t_star_without_travel(rate_model):
    case, t_star = solve_t_star(0.4, 0.0, 2.0, 10.0, rate_model)
    assert case is DelayCase.DEPLETES_AT_SINK
    assert t_star == pytest.approx(4.0)


def test_t_star_in_transit_with_constant_rate():
    # lambda < r_max d/(vT) = 0.5
    case, t_star = solve_t_star(0.3, 10.0, 2.0, 10.0, CONSTANT)
    assert case is DelayCase.DEPLETES_IN_TRANSIT
    assert t_star == pytest.approx(3.0, abs=1e-8)


def test_t_star_at_sink(rate_model):
    assert 0.3 > lambda_hat_max(10.0, 2.0, 10.0, rate_model)
    case, t_star = solve_t_star(0.3, 10.0, 2.0, 10.0, rate_model)
    assert case is DelayCase.DEPLETES_AT_SINK
    assert t_star == pytest.approx(5.0 + (3.0 - TRANSIT_SERVICE), rel=1e-9)


@pytest.mark.parametrize("lam", [0.0, -0.1, 0.6])
def test_t_star_needs_a_stable_rate(rate_model, lam):
    with pytest.raises(PreconditionError):
        solve_t_star(lam, 10.0, 2.0, 10.0, rate_model)


@pytest.mark.parametrize("lam", np.linspace(0.05, 0.95, 10))
@pytest.mark.parametrize("epoch_len", [1.0, 10.0, 40.0])
def test_delay_without_travel(rate_model, lam, epoch_len):
    result = closed_form_delay(lam, 0.0, 1.0, epoch_len, rate_model)
    expected = epoch_len / 2 + lam * epoch_len / 2
    assert result.avg_delay == pytest.approx(expected, rel=1e-6)
    assert result.avg_total_queue == pytest.approx(lam * expected, rel=1e-6)


def test_delay_is_continuous_between_cases():
    rng = np.random.default_rng(11)
    for _ in range(20):
        d = rng.uniform(1, 20)
        v = rng.uniform(0.5, 4)
        epoch_len = d / v / rng.uniform(0.1, 0.9)
        model = RateModel(r_max=rng.uniform(0.5, 2), c=rng.uniform(0.5, 2), eta=rng.uniform(1, 3))
        boundary = lambda_hat_max(d, v, epoch_len, model)
        below = closed_form_delay(boundary * (1 - 1e-9), d, v, epoch_len, model)
        above = closed_form_delay(boundary * (1 + 1e-9), d, v, epoch_len, model)
        assert below.case is DelayCase.DEPLETES_IN_TRANSIT
        assert above.case is DelayCase.DEPLETES_AT_SINK
        assert abs(below.avg_delay - above.avg_delay) / below.avg_delay < 1e-6


def test_light_load_delay_is_half_an_epoch(rate_model):
    lam = 1e-6 * lambda_max(10.0, 2.0, 10.0, rate_model)
    assert closed_form_delay(lam, 10.0, 2.0, 10.0, rate_model).avg_delay == pytest.approx(5.0, rel=1e-3)


def test_delay_grows_with_load(rate_model):
    limit = lambda_max(10.0, 2.0, 10.0, rate_model)
    delays = [closed_form_delay(f * limit, 10.0, 2.0, 10.0, rate_model).avg_delay for f in np.linspace(0.1, 0.9, 9)]
    assert all(a < b for a, b in zip(delays, delays[1:]))


def test_little_delay():
    metrics = SimpleNamespace(avg_queue=np.array([6.0, 0.0, 1.0]))
    assert little_delay(metrics, [2.0, 0.5, 0.0]) == (3.0, 0.0, None)
    with pytest.raises(ValidationError):
        little_delay(metrics, [1.0])


def test_one_flow_spec(rate_model):
    spec = one_flow_spec(0.3, 10.0, 2.0, 10.0, rate_model, resolution=10)
    assert spec.n_robots == 2
    assert spec.epoch_len == 100
    assert spec.velocity == pytest.approx(0.2)
    assert spec.flows[0].lam == pytest.approx(0.03)
    assert spec.rate_model.r_max == pytest.approx(0.1)
    assert spec.initial_robot_positions == (Point(10.0, 0.0), Point(0.0, 0.0))
    assert one_flow_spec(0.3, 10.0, 2.0, 2.5, rate_model, resolution=2).epoch_len == 5
    with pytest.raises(ValidationError):
        one_flow_spec(0.3, 10.0, 2.0, 2.5, rate_model)
    with pytest.raises(ValidationError):
        one_flow_spec(0.3, 10.0, 2.0, 10.0, rate_model, resolution=0)


@pytest.mark.parametrize("lam", [0.05, 0.3])
def test_simulated_delay_matches_the_closed_form(rate_model, lam):
    theory = closed_form_delay(lam, 10.0, 2.0, 10.0, rate_model).avg_delay
    simulated = simulate_delay(lam, 10.0, 2.0, 10.0, rate_model, horizon_epochs=200, resolution=10)
    assert simulated == pytest.approx(theory, rel=0.05)


def test_simulated_delay_needs_arrivals(rate_model):
    with pytest.raises(ValidationError):
        simulate_delay(0.0, 10.0, 2.0, 10.0, rate_model, horizon_epochs=10)
