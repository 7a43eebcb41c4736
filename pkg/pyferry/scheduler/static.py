from ..capacity import ScheduleProgram
from ..engine import Allocation, SimState
from ..errors import ValidationError
from ..model import NetworkSpec
from . import Scheduler

__all__ = [
    "StaticScheduler",
    "static_scheduler",
]


class StaticScheduler(Scheduler):
    """
    Plays a schedule program cyclically, one entry per epoch, ignoring the
    queue state.
    """

    name = "static"

    def __init__(self, program: ScheduleProgram) -> None:
        if not program.entries:
            raise ValidationError("a static scheduler needs a nonempty program")
        for alloc, _ in program.entries:
            alloc.validate()
        self.program = program
        self._epoch = 0

    def reset(self) -> None:
        self._epoch = 0

    def allocate(self, state: SimState, spec: NetworkSpec) -> Allocation:
        alloc = self.program.allocation_at(self._epoch)
        self._epoch += 1
        return alloc


def static_scheduler(program: ScheduleProgram) -> StaticScheduler:
    return StaticScheduler(program)
