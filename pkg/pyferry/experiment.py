"""
Experiment orchestration: single runs, parameter sweeps, stability boundary
search and the closed-form vs. simulated delay table. Results are written
as CSV with a fixed header.
"""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .analytics import closed_form_delay, lambda_hat_max, lambda_max, little_delay, simulate_delay
from .capacity import in_capacity_region, in_inner_bound, load_program, oracle_program
from .config import ExperimentConfig, SchedulerConfig, SchedulerKind, SweepVariable
from .engine import Metrics, run
from .errors import FerryError, PreconditionError, ValidationError
from .model import NetworkSpec, RateModel
from .scheduler import Scheduler
from .scheduler.brute_force import BruteForceScheduler
from .scheduler.cbmf import CBMFScheduler
from .scheduler.static import StaticScheduler

__all__ = [
    "ResultRow",
    "DelayRow",
    "RESULT_HEADER",
    "DELAY_HEADER",
    "DEFAULT_LAMBDA_FRACTIONS",
    "build_scheduler",
    "network_variant",
    "run_point",
    "run_experiment",
    "find_stability_boundary",
    "emit_delay_oracle_table",
    "write_csv",
    "STATUS_OK",
    "STATUS_FAILED",
    "STATUS_INFEASIBLE",
]

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_FAILED = "failed"
STATUS_INFEASIBLE = "infeasible"

DEFAULT_LAMBDA_FRACTIONS = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class ResultRow:
    sweep_variable: str
    sweep_value: Optional[float]
    flow: int
    lam: Optional[float]
    throughput: Optional[float]
    avg_queue: Optional[float]
    delay: Optional[float]
    verdict: Optional[str]
    in_capacity_region: Optional[bool]
    in_inner_bound: Optional[bool]
    status: str = STATUS_OK
    error: str = ""


RESULT_HEADER = (
    "sweep_variable",
    "sweep_value",
    "flow",
    "lambda",
    "throughput",
    "avg_queue",
    "delay",
    "verdict",
    "in_capacity_region",
    "in_inner_bound",
    "status",
    "error",
)


@dataclass(frozen=True)
class DelayRow:
    distance: float
    velocity: float
    epoch_len: float
    lam: Optional[float]
    lambda_hat_max: Optional[float]
    lambda_max: Optional[float]
    case: str
    closed_form_delay: Optional[float]
    simulated_delay: Optional[float]
    relative_error: Optional[float]
    status: str


DELAY_HEADER = (
    "distance",
    "velocity",
    "epoch_len",
    "lambda",
    "lambda_hat_max",
    "lambda_max",
    "case",
    "closed_form_delay",
    "simulated_delay",
    "relative_error",
    "status",
)


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Any]) -> None:
    " UTF-8 CSV with '.' decimals and a fixed column order. "
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in astuple(row)])


def build_scheduler(cfg: SchedulerConfig, spec: NetworkSpec) -> Scheduler:
    if cfg.kind is SchedulerKind.CBMF:
        return CBMFScheduler()
    if cfg.kind is SchedulerKind.BRUTE_FORCE:
        return BruteForceScheduler()
    if cfg.kind is SchedulerKind.STATIC:
        assert cfg.program is not None
        program = load_program(cfg.program)
        if (program.n_flows, program.n_robots) != (spec.n_flows, spec.n_robots):
            raise ValidationError(
                "program %s is for K=%d, N=%d but the network has K=%d, N=%d"
                % (cfg.program, program.n_flows, program.n_robots, spec.n_flows, spec.n_robots))
        return StaticScheduler(program)
    lam = spec.lambdas if cfg.oracle_lambda is None else np.array(cfg.oracle_lambda)
    program = oracle_program(
        lam,
        spec,
        denom_cap=cfg.denom_cap,
        sink_slack_epochs=cfg.sink_slack_epochs,
        transit_compensation=cfg.transit_compensation,
    )
    return StaticScheduler(program)


def network_variant(spec: NetworkSpec, variable: Optional[SweepVariable], value: Optional[float]) -> NetworkSpec:
    if variable is None or value is None:
        return spec
    if variable is SweepVariable.LAMBDA_SCALE:
        return spec.with_lambda_scale(value)
    if variable is SweepVariable.VELOCITY:
        return spec.with_velocity(value)
    return spec.with_epoch_len(value)


def _region_flags(spec: NetworkSpec) -> Tuple[bool, bool]:
    k, n, r_max = spec.n_flows, spec.n_robots, spec.rate_model.r_max
    lam = spec.lambdas
    in_region = in_capacity_region(lam, k, n, r_max)
    try:
        in_bound = in_inner_bound(lam, spec.velocity, spec.epoch_len, spec.d_max, k, n, r_max)
    except PreconditionError:
        # d/(vT) >= 1: the inner bound is empty.
        in_bound = False
    return in_region, in_bound


def _rows_from_metrics(
    spec: NetworkSpec, metrics: Metrics, variable: str, value: Optional[float]
) -> List[ResultRow]:
    in_region, in_bound = _region_flags(spec)
    delays = little_delay(metrics, spec.lambdas)
    return [
        ResultRow(
            sweep_variable=variable,
            sweep_value=value,
            flow=flow.id,
            lam=flow.lam,
            throughput=float(metrics.throughput[i]),
            avg_queue=float(metrics.avg_queue[i]),
            delay=delays[i],
            verdict=None if metrics.verdicts[i] is None else metrics.verdicts[i].value,
            in_capacity_region=in_region,
            in_inner_bound=in_bound,
        )
        for i, flow in enumerate(spec.flows)
    ]


def run_point(cfg: ExperimentConfig, value: Optional[float] = None) -> List[ResultRow]:
    """
    Simulate one sweep point (or the base configuration when `value` is
    None). Failures become rows with status "failed" instead of exceptions.
    """
    variable = cfg.sweep.variable if cfg.sweep is not None and value is not None else None
    name = variable.value if variable is not None else ""
    try:
        spec = network_variant(cfg.network, variable, value)
        scheduler = build_scheduler(cfg.scheduler, spec)
        metrics = run(spec, scheduler, cfg.horizon_epochs, cfg.warmup_fraction)
    except FerryError as e:
        logger.warning("sweep point %s=%s failed: %s", name, value, e)
        return [
            ResultRow(name, value, flow.id, None, None, None, None, None, None, None, STATUS_FAILED, str(e))
            for flow in cfg.network.flows
        ]
    logger.info(
        "sweep point %s=%s: %s", name or "-", value,
        ", ".join("flow %d %s" % (i + 1, v.value if v is not None else "not judged")
                  for i, v in enumerate(metrics.verdicts)))
    return _rows_from_metrics(spec, metrics, name, value)


def _run_point_args(args: Tuple[ExperimentConfig, Optional[float]]) -> List[ResultRow]:
    return run_point(*args)


def run_experiment(cfg: ExperimentConfig, sweep: bool = True, write: bool = True) -> List[ResultRow]:
    """
    Run every sweep point of `cfg` (or only the base configuration when
    `sweep` is false or the config has no sweep) and write the result CSV.
    Rows are ordered by sweep value, then flow.
    """
    values: List[Optional[float]] = [None]
    if sweep and cfg.sweep is not None:
        values = list(cfg.sweep.values)

    if cfg.workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            per_point = list(executor.map(_run_point_args, [(cfg, v) for v in values]))
    else:
        per_point = [run_point(cfg, v) for v in values]

    rows = [row for point in per_point for row in point]
    if write:
        write_csv(cfg.output_path, RESULT_HEADER, rows)
        logger.info("wrote %d rows to %s", len(rows), cfg.output_path)
    return rows


def _stable_at(cfg: ExperimentConfig, spec: NetworkSpec, scale: float) -> bool:
    scaled = spec.with_lambda_scale(scale)
    scheduler = build_scheduler(cfg.scheduler, scaled)
    return run(scaled, scheduler, cfg.horizon_epochs, cfg.warmup_fraction).stable


def find_stability_boundary(
    cfg: ExperimentConfig,
    lo: float = 0.0,
    hi: Optional[float] = None,
    iterations: int = 10,
) -> float:
    """
    Largest arrival-rate scale found stable by bisection between `lo` (assumed
    stable) and `hi`. The default `hi` sits 10% beyond the point where the
    scaled rate vector leaves the capacity hull.
    """
    spec = cfg.network
    lam = spec.lambdas
    if not (lam > 0).any():
        raise ValidationError("at least one flow needs a positive arrival rate")
    r_max = spec.rate_model.r_max
    if hi is None:
        hi = 1.1 * min(r_max / lam.max(), r_max * spec.n_robots / 2 / lam.sum())
    if _stable_at(cfg, spec, hi):
        logger.warning("still stable at the upper scale %g", hi)
        return hi
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if _stable_at(cfg, spec, mid):
            lo = mid
        else:
            hi = mid
        logger.info("stability boundary in [%g, %g]", lo, hi)
    return lo


def _delay_rows_for(
    d: float,
    v: float,
    epoch_len: float,
    lambdas: Optional[Sequence[float]],
    fractions: Sequence[float],
    rate_model: RateModel,
    horizon_epochs: int,
    warmup_fraction: float,
    resolution: int,
) -> List[DelayRow]:
    try:
        hat, limit = lambda_hat_max(d, v, epoch_len, rate_model), lambda_max(d, v, epoch_len, rate_model)
    except PreconditionError:
        grid: Sequence[Optional[float]] = list(lambdas) if lambdas is not None else [None] * len(fractions)
        return [
            DelayRow(d, v, epoch_len, lam, None, None, "", None, None, None, STATUS_INFEASIBLE)
            for lam in grid
        ]

    rows = []
    grid = list(lambdas) if lambdas is not None else [f * limit for f in fractions]
    for lam in grid:
        assert lam is not None
        if not 0 < lam < limit:
            rows.append(DelayRow(d, v, epoch_len, lam, hat, limit, "", None, None, None, STATUS_INFEASIBLE))
            continue
        theory = closed_form_delay(lam, d, v, epoch_len, rate_model)
        simulated = simulate_delay(
            lam, d, v, epoch_len, rate_model, horizon_epochs, warmup_fraction, resolution)
        error = abs(simulated - theory.avg_delay) / theory.avg_delay
        logger.info(
            "d=%g v=%g T=%g lambda=%.6g: closed form %.6g, simulated %.6g (%.2f%%)",
            d, v, epoch_len, lam, theory.avg_delay, simulated, 100 * error)
        rows.append(DelayRow(
            d, v, epoch_len, lam, hat, limit, theory.case.value,
            theory.avg_delay, simulated, error, STATUS_OK))
    return rows


def emit_delay_oracle_table(
    d: float,
    velocities: Sequence[float],
    epoch_lens: Sequence[float],
    rate_model: RateModel,
    path: Optional[str] = None,
    lambdas: Optional[Sequence[float]] = None,
    lambda_fractions: Sequence[float] = DEFAULT_LAMBDA_FRACTIONS,
    horizon_epochs: int = 200,
    warmup_fraction: float = 0.1,
    resolution: int = 10,
) -> List[DelayRow]:
    """
    Closed-form and simulated delay of the single-flow, two-robot system side
    by side, for every (v, T) pair and arrival rate. Rates are given either
    absolutely (`lambdas`) or as fractions of lambda_max. Points at or beyond
    lambda_max, and (v, T) pairs with d/(vT) >= 1, are marked infeasible.
    """
    if not velocities or not epoch_lens:
        raise ValidationError("need at least one velocity and one epoch length")
    if lambdas is None and not lambda_fractions:
        raise ValidationError("need arrival rates or fractions of lambda_max")
    rows = []
    for v in velocities:
        for epoch_len in epoch_lens:
            rows.extend(_delay_rows_for(
                d, v, epoch_len, lambdas, lambda_fractions, rate_model,
                horizon_epochs, warmup_fraction, resolution))
    if path is not None:
        write_csv(path, DELAY_HEADER, rows)
    return rows

