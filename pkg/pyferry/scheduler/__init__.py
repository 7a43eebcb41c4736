from abc import ABCMeta, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..engine import Allocation, SimState
from ..errors import ValidationError
from ..model import NetworkSpec

__all__ = [
    "Scheduler",
    "WeightTable",
    "cbmf_weights",
    "objective",
    "check_robot_count",
    "tie_tolerance",
]


class Scheduler(metaclass=ABCMeta):
    """
    Epoch-boundary allocation policy. One instance belongs to one run.
    """

    #: Short name, used in logs and result files.
    name: str = ""

    @abstractmethod
    def allocate(self, state: SimState, spec: NetworkSpec) -> Allocation:
        """
        Return the allocation for the epoch starting at `state`. The state
        must not be modified.
        """

    def reset(self) -> None:
        " Called by the engine before the first epoch of a run. "


@dataclass(frozen=True)
class WeightTable:
    #: K x N, Q_src(i) - Q_j^i
    w_src: np.ndarray
    #: K x N, Q_j^i
    w_sink: np.ndarray

    def slot_matrix(self) -> np.ndarray:
        """
        N x 2K matrix of the weight robot j earns in every slot, with the
        slots ordered src(1..K), sink(1..K).
        """
        return np.hstack([self.w_src.T, self.w_sink.T])


def cbmf_weights(state: SimState) -> WeightTable:
    " Queue-differential weights of every (flow, robot) pair. "
    robot_q = state.robot_q.T
    return WeightTable(w_src=state.src_q[:, None] - robot_q, w_sink=robot_q.copy())


def objective(weights: WeightTable, alloc: Allocation) -> float:
    " sum over i, j of |A(i, j)| * w_{i,j}(A(i, j)). "
    matrix = weights.slot_matrix()
    return float(sum(matrix[j, s] for j, s in enumerate(alloc.slots())))


def check_robot_count(spec: NetworkSpec) -> None:
    if spec.n_robots > 2 * spec.n_flows:
        raise ValidationError("N ≤ 2K violated: N=%d, K=%d" % (spec.n_robots, spec.n_flows))


def tie_tolerance(matrix: np.ndarray) -> float:
    " Two objective values closer than this are treated as a tie. "
    if matrix.size == 0:
        return 1e-9
    return 1e-9 * max(1.0, float(np.abs(matrix).max()) * matrix.shape[0])
