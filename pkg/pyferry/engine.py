"""
Deterministic discrete-time simulation of robot motion, epoch-wise
allocation, fluid queue dynamics and arrivals.

Within one time step every robot first moves toward the node it is
allocated to, then transfers data at its new distance, and finally every
source receives its arrivals.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EngineError, ValidationError
from .model import NetworkSpec, Point, rate_at

if TYPE_CHECKING:
    from .scheduler import Scheduler

__all__ = [
    "Allocation",
    "SimState",
    "Metrics",
    "Verdict",
    "initial_state",
    "step",
    "run",
    "stability_verdict",
    "conservation_error",
    "SLOPE_TOLERANCE",
    "QUEUE_CAP",
    "MIN_JUDGED_EPOCHS",
]

logger = logging.getLogger(__name__)

#: Largest least-squares queue slope (packets per step) still judged stable.
SLOPE_TOLERANCE = 1e-3

#: Any queue reaching this size is judged unstable.
QUEUE_CAP = 1e6

#: Shortest run, in epochs, that gets a stability verdict.
MIN_JUDGED_EPOCHS = 4

#: Relative tolerance of the conservation check.
CONSERVATION_TOLERANCE = 1e-9


class Allocation:
    """
    The K x N allocation matrix of one epoch. ``a[i, j]`` is +1 when robot
    ``j`` is sent to the source of flow ``i``, -1 when it is sent to the
    sink, and 0 otherwise.

    Robots are also addressed through slot indices: slot ``i`` is
    ``src(i + 1)`` and slot ``K + i`` is ``sink(i + 1)``.
    """

    def __init__(self, a: Sequence[Sequence[int]]) -> None:
        matrix = np.array(a, dtype=int)
        if matrix.ndim != 2:
            raise ValidationError("allocation must be a K x N matrix, got shape %r" % (matrix.shape,))
        self.a = matrix
        self.a.setflags(write=False)
        self.validate()

    @classmethod
    def from_slots(cls, slots: Sequence[int], n_flows: int) -> "Allocation":
        a = np.zeros((n_flows, len(slots)), dtype=int)
        for j, s in enumerate(slots):
            if not 0 <= s < 2 * n_flows:
                raise ValidationError("slot %r out of range for K=%d" % (s, n_flows))
            if s < n_flows:
                a[s, j] = 1
            else:
                a[s - n_flows, j] = -1
        return cls(a)

    @property
    def n_flows(self) -> int:
        return self.a.shape[0]

    @property
    def n_robots(self) -> int:
        return self.a.shape[1]

    def validate(self) -> None:
        " One node per robot, at most one robot per source and per sink. "
        a = self.a
        if not np.isin(a, (-1, 0, 1)).all():
            raise ValidationError("allocation entries must be in {-1, 0, +1}")
        per_robot = np.abs(a).sum(axis=0)
        if (per_robot != 1).any():
            j = int(np.flatnonzero(per_robot != 1)[0])
            raise ValidationError("robot %d must be allocated to exactly one node" % (j + 1))
        if ((a == 1).sum(axis=1) > 1).any():
            raise ValidationError("a source may receive at most one robot")
        if ((a == -1).sum(axis=1) > 1).any():
            raise ValidationError("a sink may receive at most one robot")

    def slots(self) -> Tuple[int, ...]:
        " Slot index of every robot. "
        k = self.n_flows
        result = []
        for j in range(self.n_robots):
            i = int(np.flatnonzero(self.a[:, j])[0])
            result.append(i if self.a[i, j] == 1 else k + i)
        return tuple(result)

    def targets(self) -> List[Tuple[int, bool]]:
        " (flow index, is_source) for every robot. "
        k = self.n_flows
        return [(s % k, s < k) for s in self.slots()]

    def to_list(self) -> List[List[int]]:
        return self.a.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.a.shape == other.a.shape and bool((self.a == other.a).all())

    def __hash__(self) -> int:
        return hash((self.a.shape, self.a.tobytes()))

    def __repr__(self) -> str:
        return "Allocation(%r)" % (self.to_list(),)


@dataclass
class SimState:
    """
    All queues, robot positions and the clock. Arrays are owned by the run
    that created the state; schedulers only read them.
    """

    t: int
    robot_pos: np.ndarray  # N x 2
    src_q: np.ndarray  # K
    robot_q: np.ndarray  # N x K
    delivered: np.ndarray  # K
    arrived: np.ndarray  # K

    @property
    def n_flows(self) -> int:
        return self.src_q.shape[0]

    @property
    def n_robots(self) -> int:
        return self.robot_q.shape[0]

    def total_queue(self) -> np.ndarray:
        " Per flow: source queue plus every robot queue of that flow. "
        return self.src_q + self.robot_q.sum(axis=0)

    def robot_point(self, j: int) -> Point:
        return Point(float(self.robot_pos[j, 0]), float(self.robot_pos[j, 1]))

    def copy(self) -> "SimState":
        return SimState(
            t=self.t,
            robot_pos=self.robot_pos.copy(),
            src_q=self.src_q.copy(),
            robot_q=self.robot_q.copy(),
            delivered=self.delivered.copy(),
            arrived=self.arrived.copy(),
        )


def initial_state(spec: NetworkSpec) -> SimState:
    k, n = spec.n_flows, spec.n_robots
    return SimState(
        t=0,
        robot_pos=np.array([p.as_tuple() for p in spec.initial_robot_positions], dtype=float),
        src_q=np.zeros(k),
        robot_q=np.zeros((n, k)),
        delivered=np.zeros(k),
        arrived=np.zeros(k),
    )


def conservation_error(state: SimState) -> float:
    """
    Largest relative deviation from arrived = queued + delivered over all
    flows.
    """
    balance = state.arrived - (state.total_queue() + state.delivered)
    scale = np.maximum(state.arrived, 1.0)
    return float(np.max(np.abs(balance) / scale))


_Target = Tuple[int, bool, float, float]


def _resolve_targets(alloc: Allocation, spec: NetworkSpec) -> List[_Target]:
    result = []
    for i, to_source in alloc.targets():
        node = spec.flows[i].src if to_source else spec.flows[i].sink
        result.append((i, to_source, node.x, node.y))
    return result


def _check_dimensions(state: SimState, alloc: Allocation, spec: NetworkSpec) -> None:
    if alloc.n_flows != spec.n_flows or alloc.n_robots != spec.n_robots:
        raise ValidationError(
            "allocation is %dx%d but the network has K=%d flows and N=%d robots"
            % (alloc.n_flows, alloc.n_robots, spec.n_flows, spec.n_robots))
    if state.n_flows != spec.n_flows or state.n_robots != spec.n_robots:
        raise ValidationError(
            "state has K=%d, N=%d but the network has K=%d, N=%d"
            % (state.n_flows, state.n_robots, spec.n_flows, spec.n_robots))


def _advance(state: SimState, targets: List[_Target], spec: NetworkSpec, lambdas: np.ndarray) -> None:
    """
    Advance `state` in place by one time step.
    """
    v = spec.velocity
    model = spec.rate_model
    pos = state.robot_pos
    for j, (i, to_source, tx, ty) in enumerate(targets):
        dx = tx - pos[j, 0]
        dy = ty - pos[j, 1]
        old = math.hypot(dx, dy)
        if old <= v:
            pos[j, 0] = tx
            pos[j, 1] = ty
            d = 0.0
        else:
            frac = v / old
            pos[j, 0] += dx * frac
            pos[j, 1] += dy * frac
            d = old - v

        rate = rate_at(model, d)
        if to_source:
            n_p = min(rate, state.src_q[i])
            state.robot_q[j, i] += n_p
            state.src_q[i] -= n_p
        else:
            n_p = min(rate, state.robot_q[j, i])
            state.robot_q[j, i] -= n_p
            state.delivered[i] += n_p

    state.src_q += lambdas
    state.arrived += lambdas
    state.t += 1


def step(state: SimState, alloc: Allocation, spec: NetworkSpec) -> SimState:
    """
    Return the state one time step after `state`, with every robot acting
    on `alloc`.
    """
    _check_dimensions(state, alloc, spec)
    new_state = state.copy()
    _advance(new_state, _resolve_targets(alloc, spec), spec, spec.lambdas)
    return new_state


class Verdict(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


def stability_verdict(
    total_queue_series: Sequence[float],
    epoch_len: int = 1,
    slope_tolerance: float = SLOPE_TOLERANCE,
    queue_cap: float = QUEUE_CAP,
) -> Verdict:
    """
    Judge a total-queue time series: stable when the least-squares slope over
    the second half stays below `slope_tolerance` and the queue never
    reaches `queue_cap`.
    """
    series = np.asarray(total_queue_series, dtype=float)
    if series.ndim != 1 or len(series) < MIN_JUDGED_EPOCHS * max(1, epoch_len):
        raise ValidationError(
            "need at least %d epochs (%d samples) to judge stability, got %d"
            % (MIN_JUDGED_EPOCHS, MIN_JUDGED_EPOCHS * epoch_len, series.size))
    tail = series[len(series) // 2:]
    slope = np.polyfit(np.arange(len(tail), dtype=float), tail, 1)[0]
    if slope < slope_tolerance and series.max() < queue_cap:
        return Verdict.STABLE
    return Verdict.UNSTABLE


@dataclass
class Metrics:
    #: Total queue per flow after every step (horizon_steps x K).
    queue_series: np.ndarray
    #: Time-averaged total queue per flow, after the warm-up prefix.
    avg_queue: np.ndarray
    #: Little's-law delay per flow, None where lambda is 0.
    delay: Tuple[Optional[float], ...]
    #: Delivered packets per step, per flow.
    throughput: np.ndarray
    #: None per flow when the run is too short to judge.
    verdicts: Tuple[Optional[Verdict], ...]
    arrived: np.ndarray
    delivered: np.ndarray
    horizon_steps: int
    warmup_steps: int
    final_state: SimState

    @property
    def stable(self) -> bool:
        return all(v is Verdict.STABLE for v in self.verdicts)


def _build_metrics(
    series: np.ndarray, state: SimState, spec: NetworkSpec, warmup_steps: int
) -> Metrics:
    lambdas = spec.lambdas
    avg_queue = series[warmup_steps:].mean(axis=0)
    delay = tuple(
        float(q / lam) if lam > 0 else None for q, lam in zip(avg_queue, lambdas)
    )
    verdicts: Tuple[Optional[Verdict], ...]
    if series.shape[0] < MIN_JUDGED_EPOCHS * spec.epoch_len:
        verdicts = (None,) * spec.n_flows
    else:
        verdicts = tuple(
            stability_verdict(series[:, i], spec.epoch_len) for i in range(spec.n_flows)
        )
    horizon_steps = series.shape[0]
    return Metrics(
        queue_series=series,
        avg_queue=avg_queue,
        delay=delay,
        throughput=state.delivered / horizon_steps,
        verdicts=verdicts,
        arrived=state.arrived.copy(),
        delivered=state.delivered.copy(),
        horizon_steps=horizon_steps,
        warmup_steps=warmup_steps,
        final_state=state,
    )


def run(
    spec: NetworkSpec,
    scheduler: "Scheduler",
    horizon_epochs: int,
    warmup_fraction: float = 0.0,
    check_invariants: bool = False,
) -> Metrics:
    """
    Simulate `horizon_epochs` epochs. The scheduler is queried with the full
    state at every epoch boundary and its allocation is held for T steps.
    """
    if horizon_epochs < 1:
        raise ValidationError("horizon must be at least one epoch, got %r" % (horizon_epochs,))
    if not 0 <= warmup_fraction < 1:
        raise ValidationError("warm-up fraction must be in [0, 1), got %r" % (warmup_fraction,))

    epoch_len = spec.epoch_len
    lambdas = spec.lambdas
    state = initial_state(spec)
    series = np.empty((horizon_epochs * epoch_len, spec.n_flows))
    scheduler.reset()

    for epoch in range(horizon_epochs):
        alloc = scheduler.allocate(state, spec)
        _check_dimensions(state, alloc, spec)
        targets = _resolve_targets(alloc, spec)
        logger.debug("epoch %d: slots %r", epoch, alloc.slots())

        for _ in range(epoch_len):
            _advance(state, targets, spec, lambdas)
            series[state.t - 1] = state.total_queue()
            if check_invariants:
                _check_invariants(state)

    warmup_steps = int(math.floor(warmup_fraction * horizon_epochs)) * epoch_len
    return _build_metrics(series, state, spec, warmup_steps)


def _check_invariants(state: SimState) -> None:
    if (state.src_q < 0).any() or (state.robot_q < 0).any():
        raise EngineError("negative queue at t=%d" % state.t)
    error = conservation_error(state)
    if error > CONSERVATION_TOLERANCE:
        raise EngineError("conservation violated at t=%d (relative error %.3g)" % (state.t, error))
