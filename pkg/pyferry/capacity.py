"""
Capacity region mathematics.

The capacity region is the open polytope

    0 <= lambda_i < R_max,  sum(lambda) < R_max N / 2

and its closure is the convex hull of the "basis" service vectors
a_i R_max / 2 with a in {0, 1, 2}^K, sum(a) <= N. A rate vector inside the
hull is decomposed into convex coefficients over these basis vectors, which
are then turned into a cyclic epoch program.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .engine import Allocation
from .errors import ConfigError, PreconditionError, ValidationError
from .model import NetworkSpec, transit_fraction

__all__ = [
    "BasisAllocation",
    "Decomposition",
    "ScheduleProgram",
    "in_capacity_region",
    "in_hull",
    "in_inner_bound",
    "enumerate_basis",
    "decompose",
    "synthesize_schedule",
    "oracle_program",
    "load_program",
    "save_program",
]

logger = logging.getLogger(__name__)

_HULL_TOLERANCE = 1e-12
_SNAP_TOLERANCE = 1e-9


def _as_rates(lam: Sequence[float], n_flows: int) -> np.ndarray:
    rates = np.asarray(lam, dtype=float).reshape(-1)
    if rates.shape[0] != n_flows:
        raise ValidationError("expected %d arrival rates, got %d" % (n_flows, rates.shape[0]))
    if not np.isfinite(rates).all():
        raise ValidationError("arrival rates must be finite")
    return rates


def in_capacity_region(lam: Sequence[float], n_flows: int, n_robots: int, r_max: float) -> bool:
    " Membership in the open capacity region. "
    rates = _as_rates(lam, n_flows)
    return bool(
        (rates >= 0).all()
        and (rates < r_max).all()
        and rates.sum() < r_max * n_robots / 2
    )


def in_hull(lam: Sequence[float], n_flows: int, n_robots: int, r_max: float) -> bool:
    " Membership in the closed convex hull of the basis service vectors. "
    rates = _as_rates(lam, n_flows)
    tol = _HULL_TOLERANCE * r_max * max(1, n_robots)
    return bool(
        (rates >= 0).all()
        and (rates <= r_max + tol).all()
        and rates.sum() <= r_max * n_robots / 2 + tol
    )


def in_inner_bound(
    lam: Sequence[float],
    v: float,
    epoch_len: float,
    d_max: float,
    n_flows: int,
    n_robots: int,
    r_max: float,
) -> bool:
    """
    Membership in the capacity region discounted by the transit fraction
    d/(vT). Raises PreconditionError when a robot cannot cross the network
    within one epoch.
    """
    if not (math.isfinite(v) and v > 0):
        raise ValidationError("velocity must be finite and > 0, got %r" % (v,))
    if not (math.isfinite(epoch_len) and epoch_len > 0):
        raise ValidationError("epoch length must be finite and > 0, got %r" % (epoch_len,))
    fraction = d_max / (v * epoch_len)
    if not fraction < 1:
        raise PreconditionError("inner bound requires d/(vT) < 1, got %.6g" % fraction)
    return in_capacity_region(lam, n_flows, n_robots, r_max * (1 - fraction))


@dataclass(frozen=True)
class BasisAllocation:
    #: Number of robots serving each flow.
    a: Tuple[int, ...]
    r_max: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(int(x) for x in self.a))
        if any(x not in (0, 1, 2) for x in self.a):
            raise ValidationError("basis entries must be in {0, 1, 2}, got %r" % (self.a,))

    @property
    def n_robots_used(self) -> int:
        return sum(self.a)

    @property
    def service_rate(self) -> np.ndarray:
        return np.array(self.a, dtype=float) * self.r_max / 2


def enumerate_basis(n_flows: int, n_robots: int, r_max: float = 1.0) -> Tuple[BasisAllocation, ...]:
    """
    All basis allocations a in {0, 1, 2}^K with sum(a) <= N, in
    lexicographic order.
    """
    if n_flows < 1 or not 1 <= n_robots <= 2 * n_flows:
        raise ValidationError("need K >= 1 and 1 <= N <= 2K, got K=%d, N=%d" % (n_flows, n_robots))
    return tuple(
        BasisAllocation(a, r_max)
        for a in itertools.product((0, 1, 2), repeat=n_flows)
        if sum(a) <= n_robots
    )


@dataclass(frozen=True)
class Decomposition:
    basis: Tuple[BasisAllocation, ...]
    #: Convex coefficients, one per basis allocation.
    alpha: np.ndarray

    def service_rate(self) -> np.ndarray:
        return sum(
            (w * b.service_rate for w, b in zip(self.alpha, self.basis)),
            np.zeros(len(self.basis[0].a)),
        )

    def support(self) -> List[Tuple[BasisAllocation, float]]:
        return [(b, float(w)) for b, w in zip(self.basis, self.alpha) if w > 0]


def _decompose_by_rounding(rates: np.ndarray, basis: Tuple[BasisAllocation, ...], r_max: float) -> np.ndarray:
    """
    Write a = 2 lambda / R_max as an average of integer rounding patterns.
    A threshold u sweeps [0, 1); flow i is rounded up when an integer shift
    of u falls into its slice of the cumulative fractional parts. Every
    pattern then has sum(pattern) <= ceil(sum(a)).
    """
    a = np.clip(2 * rates / r_max, 0, 2)
    nearest = np.round(a)
    a = np.where(np.abs(a - nearest) < _SNAP_TOLERANCE, nearest, a)
    floor = np.floor(a)
    cumulative = np.concatenate([[0.0], np.cumsum(a - floor)])

    points = sorted({0.0, 1.0} | {float(c - math.floor(c)) for c in cumulative})
    index = {b.a: n for n, b in enumerate(basis)}
    alpha = np.zeros(len(basis))
    for lo, hi in zip(points, points[1:]):
        width = hi - lo
        if width <= _HULL_TOLERANCE:
            continue
        u = (lo + hi) / 2
        shifted = np.floor(cumulative - u)
        pattern = tuple(int(x) for x in floor + np.diff(shifted))
        if pattern not in index:
            logger.debug("dropping rounding pattern %r of width %.3g", pattern, width)
            continue
        alpha[index[pattern]] += width
    return alpha / alpha.sum()


def _decompose_by_lp(rates: np.ndarray, basis: Tuple[BasisAllocation, ...]) -> Optional[np.ndarray]:
    gamma = np.array([b.service_rate for b in basis])  # M x K
    result = linprog(
        c=np.zeros(len(basis)),
        A_ub=-gamma.T,
        b_ub=-rates,
        A_eq=np.ones((1, len(basis))),
        b_eq=[1.0],
        bounds=(0, None),
        method="highs",
    )
    if result.status != 0:
        return None
    alpha = np.clip(result.x, 0, None)
    return alpha / alpha.sum()


def decompose(
    lam: Sequence[float],
    n_flows: int,
    n_robots: int,
    r_max: float,
    method: str = "rounding",
) -> Optional[Decomposition]:
    """
    Convex coefficients over `enumerate_basis` whose combined service rate
    dominates `lam`, or None when `lam` lies outside the hull.

    ``method="rounding"`` builds an exact decomposition from integer
    rounding patterns; ``method="lp"`` solves the dominating feasibility
    program with scipy's HiGHS solver.
    """
    rates = _as_rates(lam, n_flows)
    basis = enumerate_basis(n_flows, n_robots, r_max)
    if not in_hull(rates, n_flows, n_robots, r_max):
        return None

    if method == "rounding":
        alpha: Optional[np.ndarray] = _decompose_by_rounding(rates, basis, r_max)
    elif method == "lp":
        alpha = _decompose_by_lp(rates, basis)
    else:
        raise ValidationError("unknown decomposition method %r" % (method,))

    if alpha is None:
        return None
    return Decomposition(basis=basis, alpha=alpha)


class ScheduleProgram:
    """
    A cyclic list of (allocation, epoch count) entries. Each allocation is
    held for its epoch count, then the next entry follows; the program wraps
    around after `period` epochs.
    """

    def __init__(self, entries: Sequence[Tuple[Allocation, int]]) -> None:
        self.entries = tuple((alloc, int(count)) for alloc, count in entries)
        if not self.entries:
            raise ValidationError("a schedule program needs at least one entry")
        shape = self.entries[0][0].a.shape
        for alloc, count in self.entries:
            if count < 1:
                raise ValidationError("epoch counts must be positive, got %d" % count)
            if alloc.a.shape != shape:
                raise ValidationError("all allocations of a program must have the same shape")
        self._ends = np.cumsum([count for _, count in self.entries])

    @property
    def period(self) -> int:
        return int(self._ends[-1])

    @property
    def n_flows(self) -> int:
        return self.entries[0][0].n_flows

    @property
    def n_robots(self) -> int:
        return self.entries[0][0].n_robots

    def allocation_at(self, epoch: int) -> Allocation:
        position = epoch % self.period
        return self.entries[int(np.searchsorted(self._ends, position, side="right"))][0]

    def service_rates(self, r_max: float) -> np.ndarray:
        """
        Per-flow service rate assuming instantaneous travel: the fraction of
        epochs in which some robot collects at the flow's source and is at
        its sink in the epoch after, times R_max. Packets collected by a
        robot that never reaches the sink are not service.
        """
        served = np.zeros(self.n_flows)
        following = self.entries[1:] + self.entries[:1]
        for (alloc, _), (after, _) in zip(self.entries, following):
            # inside an entry the robot stays put; only its last epoch can deliver
            served += ((alloc.a == 1) & (after.a == -1)).any(axis=1)
        return served * r_max / self.period

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_flows": self.n_flows,
            "n_robots": self.n_robots,
            "entries": [{"allocation": alloc.to_list(), "epochs": count} for alloc, count in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScheduleProgram":
        return cls([(Allocation(e["allocation"]), e["epochs"]) for e in data["entries"]])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScheduleProgram):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self) -> str:
        return "ScheduleProgram(period=%d, entries=%d)" % (self.period, len(self.entries))


def _collecting_flows(basis: BasisAllocation) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    Flows collecting in the two epochs realizing a basis allocation. A flow
    with two robots collects in both. The flows with one robot are split:
    the first half of them collect in the first epoch, the rest in the
    second, so no more than N robots are ever busy across the two epochs.
    """
    both = [i for i, count in enumerate(basis.a) if count == 2]
    single = [i for i, count in enumerate(basis.a) if count == 1]
    half = (len(single) + 1) // 2
    return tuple(sorted(both + single[:half])), tuple(sorted(both + single[half:]))


def _next_slots(
    previous: Sequence[Optional[int]], collecting: Sequence[int], n_flows: int
) -> Tuple[int, ...]:
    """
    Robot slots for the next epoch. A robot that sat at a source delivers at
    that flow's sink. Each collecting flow then takes a free robot,
    preferring one that just delivered the same flow. The other robots keep
    their sink if nobody claimed it, else take free sinks, then free sources.
    """
    n_robots = len(previous)
    slots: List[Optional[int]] = [None] * n_robots
    for j, s in enumerate(previous):
        if s is not None and s < n_flows:
            slots[j] = n_flows + s

    for i in collecting:
        free = [j for j in range(n_robots) if slots[j] is None]
        if not free:
            raise ValidationError("not enough robots to collect flows %r" % (list(collecting),))
        robot = next((j for j in free if previous[j] == n_flows + i), free[0])
        slots[robot] = i

    used = {s for s in slots if s is not None}
    for j, s in enumerate(previous):
        if slots[j] is None and s is not None and s >= n_flows and s not in used:
            slots[j] = s
            used.add(s)
    spare = iter(
        [n_flows + i for i in range(n_flows) if n_flows + i not in used]
        + [i for i in range(n_flows) if i not in used]
    )
    return tuple(next(spare) if s is None else s for s in slots)


def _robot_cycle(plan: Sequence[Sequence[int]], n_flows: int, n_robots: int) -> List[Tuple[int, ...]]:
    """
    Per-epoch slots for the collecting plan. The plan is replayed until a
    pass ends where an earlier one ended; the passes from there on form a
    cycle, so a robot loaded in the last epoch delivers in the first.
    """
    state: Tuple[Optional[int], ...] = (None,) * n_robots
    # pass index starting from each end state seen so far
    starts: Dict[Tuple[Optional[int], ...], int] = {state: 0}
    passes: List[List[Tuple[int, ...]]] = []
    while True:
        epochs = []
        for collecting in plan:
            state = _next_slots(state, collecting, n_flows)
            epochs.append(state)
        passes.append(epochs)
        if state in starts:
            return [slots for done in passes[starts[state]:] for slots in done]
        starts[state] = len(passes)


def _epoch_counts(alpha: np.ndarray, denom_cap: int) -> np.ndarray:
    " Integer counts n with n / sum(n) within 1/denom_cap of alpha. "
    scaled = alpha * denom_cap
    counts = np.floor(scaled).astype(int)
    missing = denom_cap - int(counts.sum())
    if missing > 0:
        order = np.argsort(-(scaled - counts), kind="stable")
        counts[order[:missing]] += 1
    divisor = reduce(math.gcd, (int(n) for n in counts if n > 0))
    return counts // divisor


def synthesize_schedule(
    alpha: Sequence[float],
    basis: Sequence[BasisAllocation],
    spec: NetworkSpec,
    denom_cap: int = 1000,
    sink_slack_epochs: int = 0,
) -> ScheduleProgram:
    """
    Turn convex coefficients over basis allocations into a cyclic program.
    A basis allocation with n_l > 0 contributes n_l pairs of epochs; in each
    pair its one-robot flows collect once and its two-robot flows twice.
    Every robot that collects at a source delivers at that flow's sink in
    the following epoch. Idle robots wait at sinks; when there are more
    of them than free sinks the rest wait at sources and deliver next.
    """
    weights = np.asarray(alpha, dtype=float)
    if weights.shape != (len(basis),):
        raise ValidationError("got %d coefficients for %d basis allocations" % (weights.size, len(basis)))
    if (weights < -_HULL_TOLERANCE).any():
        raise ValidationError("convex coefficients must be nonnegative")
    if abs(weights.sum() - 1) > 1e-9:
        raise ValidationError("convex coefficients must sum to 1, got %.12g" % weights.sum())
    if denom_cap < 1:
        raise ValidationError("denominator cap must be >= 1, got %r" % (denom_cap,))

    k, n = spec.n_flows, spec.n_robots
    counts = _epoch_counts(np.clip(weights, 0, None), denom_cap)
    plan: List[Tuple[int, ...]] = []
    for b, count in zip(basis, counts):
        if count == 0:
            continue
        if len(b.a) != k:
            raise ValidationError("basis has %d entries, expected %d" % (len(b.a), k))
        if b.n_robots_used > n:
            raise ValidationError("basis %r needs more than %d robots" % (b.a, n))
        plan.extend(_collecting_flows(b) * int(count))
    plan.extend([()] * sink_slack_epochs)

    epochs = _robot_cycle(plan, k, n)
    entries = [
        (Allocation.from_slots(slots, k), len(list(group)))
        for slots, group in itertools.groupby(epochs)
    ]
    program = ScheduleProgram(entries)
    logger.info("synthesized program with %d entries, period %d epochs", len(entries), program.period)
    return program


def oracle_program(
    lam: Sequence[float],
    spec: NetworkSpec,
    denom_cap: int = 1000,
    sink_slack_epochs: int = 0,
    transit_compensation: bool = True,
) -> ScheduleProgram:
    """
    A static program serving `lam`. With `transit_compensation` the rate is
    first inflated by 1 / (1 - d/(vT)) to pay for time spent travelling, as
    long as that stays inside the hull. The target is then rounded up onto
    the 1/denom_cap grid so that the program serves it exactly.
    """
    k, n, r_max = spec.n_flows, spec.n_robots, spec.rate_model.r_max
    target = _as_rates(lam, k)

    if transit_compensation:
        fraction = transit_fraction(spec)
        if fraction < 1 and in_hull(target / (1 - fraction), k, n, r_max):
            target = target / (1 - fraction)
        else:
            logger.warning("cannot compensate transit time (d/(vT) = %.3g) inside the hull", fraction)

    grid = np.ceil(2 * target / r_max * denom_cap - _SNAP_TOLERANCE) / denom_cap
    if in_hull(grid * r_max / 2, k, n, r_max):
        target = grid * r_max / 2

    decomposition = decompose(target, k, n, r_max)
    if decomposition is None:
        raise PreconditionError("rate vector %r lies outside the capacity hull" % (list(target),))
    return synthesize_schedule(
        decomposition.alpha, decomposition.basis, spec, denom_cap, sink_slack_epochs)


def save_program(program: ScheduleProgram, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(program.to_dict(), f, indent=2)
        f.write("\n")


def load_program(path: str) -> ScheduleProgram:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError("cannot read schedule program: %s" % e.strerror, path=path)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path=path, line=e.lineno, column=e.colno)
    try:
        return ScheduleProgram.from_dict(data)
    except (KeyError, TypeError) as e:
        raise ConfigError("malformed schedule program (%s)" % e, path=path)
    except ValidationError as e:
        raise ConfigError(str(e), path=path)
