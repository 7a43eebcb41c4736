"""
Closed-form delay of the single-flow, two-robot system.

One source and one sink at distance d, two robots alternating between them:
in every epoch one robot (the delivering robot) carries the lambda T
packets collected during the previous epoch toward the sink while the other
one collects at the source. The delivering robot either empties its queue
while still travelling (DEPLETES_IN_TRANSIT) or only after reaching the
sink (DEPLETES_AT_SINK).

All integrals are evaluated with adaptive quadrature so that any rate model
can be plugged in.
"""
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from scipy.integrate import quad
from scipy.optimize import bisect

from .engine import Metrics, run
from .errors import PreconditionError, ValidationError
from .model import FlowSpec, NetworkSpec, Point, RateModel, rate_at
from .scheduler.cbmf import CBMFScheduler

__all__ = [
    "DelayCase",
    "DelayCaseResult",
    "cumulative_service",
    "lambda_hat_max",
    "lambda_max",
    "solve_t_star",
    "closed_form_delay",
    "little_delay",
    "one_flow_spec",
    "simulate_delay",
    "QUAD_RTOL",
    "T_STAR_XTOL",
]

QUAD_RTOL = 1e-9
T_STAR_XTOL = 1e-9


class DelayCase(enum.Enum):
    DEPLETES_IN_TRANSIT = "depletes_in_transit"
    DEPLETES_AT_SINK = "depletes_at_sink"


@dataclass(frozen=True)
class DelayCaseResult:
    case: DelayCase
    #: Time (in steps) at which the delivering robot runs empty.
    t_star: float
    avg_total_queue: float
    avg_delay: float


def _check_geometry(d: float, v: float, epoch_len: float) -> float:
    " Validate the parameters and return the travel time d/v. "
    if not d >= 0:
        raise ValidationError("distance must be >= 0, got %r" % (d,))
    if not (v > 0 and epoch_len > 0):
        raise ValidationError("velocity and epoch length must be > 0, got v=%r, T=%r" % (v, epoch_len))
    if not d / (v * epoch_len) < 1:
        raise PreconditionError("requires d/(vT) < 1, got %.6g" % (d / (v * epoch_len)))
    return d / v


def _integrate(func, upper: float) -> float:
    if upper <= 0:
        return 0.0
    value, _ = quad(func, 0.0, upper, epsrel=QUAD_RTOL, epsabs=1e-14, limit=200)
    return value


def cumulative_service(t: float, d: float, v: float, rate_model: RateModel) -> float:
    """
    Packets a robot starting at distance d can hand over while travelling
    toward the node for `t` time units: the integral of R(d - v s) over
    [0, t].
    """
    return _integrate(lambda s: rate_at(rate_model, max(d - v * s, 0.0)), t)


def _weighted_service(t: float, d: float, v: float, rate_model: RateModel) -> float:
    """
    Integral over [0, t] of the cumulative service, computed as the single
    integral of (t - s) R(d - v s).
    """
    return _integrate(lambda s: (t - s) * rate_at(rate_model, max(d - v * s, 0.0)), t)


def lambda_hat_max(d: float, v: float, epoch_len: float, rate_model: RateModel) -> float:
    " Largest arrival rate for which the delivering robot empties in transit. "
    travel = _check_geometry(d, v, epoch_len)
    return cumulative_service(travel, d, v, rate_model) / epoch_len


def lambda_max(d: float, v: float, epoch_len: float, rate_model: RateModel) -> float:
    " Average service rate of one epoch: the stability limit of the system. "
    travel = _check_geometry(d, v, epoch_len)
    in_transit = cumulative_service(travel, d, v, rate_model)
    return (in_transit + (epoch_len - travel) * rate_model.r_max) / epoch_len


def solve_t_star(
    lam: float, d: float, v: float, epoch_len: float, rate_model: RateModel
) -> Tuple[DelayCase, float]:
    """
    The case and the time at which the delivering robot, starting with
    lambda T packets, runs empty.
    """
    travel = _check_geometry(d, v, epoch_len)
    limit = lambda_max(d, v, epoch_len, rate_model)
    if not 0 < lam < limit:
        raise PreconditionError("arrival rate must be in (0, %.9g), got %r" % (limit, lam))

    load = lam * epoch_len
    in_transit = cumulative_service(travel, d, v, rate_model)
    if load <= in_transit:
        t_star = bisect(
            lambda t: cumulative_service(t, d, v, rate_model) - load,
            0.0,
            travel,
            xtol=T_STAR_XTOL,
        )
        return DelayCase.DEPLETES_IN_TRANSIT, float(t_star)
    return DelayCase.DEPLETES_AT_SINK, travel + (load - in_transit) / rate_model.r_max


def closed_form_delay(
    lam: float, d: float, v: float, epoch_len: float, rate_model: RateModel
) -> DelayCaseResult:
    """
    Time-averaged total queue over one epoch and the resulting Little's-law
    delay.
    """
    case, t_star = solve_t_star(lam, d, v, epoch_len, rate_model)
    base = lam * t_star + lam * epoch_len / 2
    if case is DelayCase.DEPLETES_IN_TRANSIT:
        queue = base - _weighted_service(t_star, d, v, rate_model) / epoch_len
    else:
        travel = d / v
        at_sink = t_star - travel
        queue = (
            base
            - _weighted_service(travel, d, v, rate_model) / epoch_len
            - at_sink * cumulative_service(travel, d, v, rate_model) / epoch_len
            - rate_model.r_max * at_sink ** 2 / (2 * epoch_len)
        )
    return DelayCaseResult(case=case, t_star=t_star, avg_total_queue=queue, avg_delay=queue / lam)


def little_delay(metrics: Metrics, lam: Sequence[float]) -> Tuple[Optional[float], ...]:
    """
    Time-averaged total queue of every flow divided by its arrival rate;
    None for flows without arrivals.
    """
    if len(lam) != len(metrics.avg_queue):
        raise ValidationError("got %d arrival rates for %d flows" % (len(lam), len(metrics.avg_queue)))
    return tuple(
        float(q) / rate if rate > 0 else None for q, rate in zip(metrics.avg_queue, lam)
    )


def one_flow_spec(
    lam: float,
    d: float,
    v: float,
    epoch_len: float,
    rate_model: RateModel,
    resolution: int = 1,
) -> NetworkSpec:
    """
    The single-flow, two-robot network: robot 1 starts at the sink and robot 2
    at the source. `resolution` simulation steps make up one time unit, so
    the epoch is T * resolution steps long and velocity, rates and arrivals
    are divided by `resolution`.
    """
    if resolution < 1 or int(resolution) != resolution:
        raise ValidationError("resolution must be a positive integer, got %r" % (resolution,))
    steps = epoch_len * resolution
    if not math.isclose(steps, round(steps)):
        raise ValidationError("T * resolution must be an integer number of steps, got %r" % (steps,))
    src, sink = Point(0.0, 0.0), Point(float(d), 0.0)
    return NetworkSpec(
        flows=(FlowSpec(id=1, src=src, sink=sink, lam=lam / resolution),),
        n_robots=2,
        velocity=v / resolution,
        epoch_len=int(round(steps)),
        rate_model=rate_model.scaled(1.0 / resolution),
        initial_robot_positions=(sink, src),
    )


def simulate_delay(
    lam: float,
    d: float,
    v: float,
    epoch_len: float,
    rate_model: RateModel,
    horizon_epochs: int = 200,
    warmup_fraction: float = 0.1,
    resolution: int = 1,
) -> float:
    """
    Little's-law delay of the single-flow, two-robot system under CBMF,
    measured by simulation and expressed in time units.
    """
    spec = one_flow_spec(lam, d, v, epoch_len, rate_model, resolution)
    metrics = run(spec, CBMFScheduler(), horizon_epochs, warmup_fraction)
    (delay,) = little_delay(metrics, spec.lambdas)
    if delay is None:
        raise ValidationError("arrival rate must be > 0 to measure delay")
    return delay / resolution
