"""
Exhaustive allocation search. Only usable for small instances; it serves as
the reference CBMF is checked against.
"""
import functools
import itertools

import numpy as np

from ..engine import Allocation, SimState
from ..errors import ValidationError
from ..model import NetworkSpec
from . import Scheduler, cbmf_weights, check_robot_count, tie_tolerance

__all__ = [
    "BruteForceScheduler",
    "brute_force_allocate",
    "MAX_ROBOTS",
    "MAX_FLOWS",
]

MAX_ROBOTS = 6
MAX_FLOWS = 4


@functools.lru_cache(maxsize=None)
def _all_slot_vectors(n_flows: int, n_robots: int) -> np.ndarray:
    # itertools.permutations yields the vectors in lexicographic order.
    return np.array(list(itertools.permutations(range(2 * n_flows), n_robots)), dtype=int)


def brute_force_allocate(state: SimState, spec: NetworkSpec) -> Allocation:
    check_robot_count(spec)
    if spec.n_robots > MAX_ROBOTS or spec.n_flows > MAX_FLOWS:
        raise ValidationError(
            "brute force is limited to N ≤ %d and K ≤ %d, got N=%d, K=%d"
            % (MAX_ROBOTS, MAX_FLOWS, spec.n_robots, spec.n_flows))

    matrix = cbmf_weights(state).slot_matrix()
    candidates = _all_slot_vectors(spec.n_flows, spec.n_robots)
    values = matrix[np.arange(spec.n_robots), candidates].sum(axis=1)
    best = values.max()
    first = int(np.argmax(values >= best - tie_tolerance(matrix)))
    return Allocation.from_slots(candidates[first].tolist(), spec.n_flows)


class BruteForceScheduler(Scheduler):
    name = "brute_force"

    def allocate(self, state: SimState, spec: NetworkSpec) -> Allocation:
        return brute_force_allocate(state, spec)
