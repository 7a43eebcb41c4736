"""
Coarse-grained backpressure: at every epoch boundary, match the robots to
the 2K source/sink slots so that the total queue-differential weight is
maximal.
"""
from typing import List

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..engine import Allocation, SimState
from ..model import NetworkSpec
from . import Scheduler, cbmf_weights, check_robot_count, tie_tolerance

__all__ = [
    "CBMFScheduler",
    "cbmf_allocate",
    "max_weight_slots",
]


def _best_value(matrix: np.ndarray) -> float:
    if matrix.shape[0] == 0:
        return 0.0
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return float(matrix[rows, cols].sum())


def max_weight_slots(matrix: np.ndarray) -> List[int]:
    """
    Maximum-weight assignment of the rows of `matrix` (robots) to distinct
    columns (slots). Among optimal assignments the lexicographically
    smallest slot vector is returned.
    """
    n_rows, n_cols = matrix.shape
    best = _best_value(matrix)
    tol = tie_tolerance(matrix)

    slots: List[int] = []
    free = list(range(n_cols))
    gained = 0.0
    for j in range(n_rows):
        for s in free:
            rest = [c for c in free if c != s]
            value = gained + matrix[j, s] + _best_value(matrix[j + 1:, rest])
            if value >= best - tol:
                slots.append(s)
                free = rest
                gained += matrix[j, s]
                break
        else:  # pragma: no cover
            raise AssertionError("no slot completes an optimal assignment")
    return slots


def cbmf_allocate(state: SimState, spec: NetworkSpec) -> Allocation:
    """
    The valid allocation maximizing the CBMF objective.
    """
    check_robot_count(spec)
    weights = cbmf_weights(state)
    return Allocation.from_slots(max_weight_slots(weights.slot_matrix()), spec.n_flows)


class CBMFScheduler(Scheduler):
    name = "cbmf"

    def allocate(self, state: SimState, spec: NetworkSpec) -> Allocation:
        return cbmf_allocate(state, spec)

