"""How many filters to remove so the fastest schedule keeps its shape."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .intmath import lcm, prod
from .tasks import Task
from .tuner.program import Program, ScheduleError

__all__ = ["TaskExhausted", "PruneDecision", "axis_step", "min_prune_step", "decide_prune_count"]


class TaskExhausted(Exception):
    """The task's layers cannot lose another full step of filters."""

    def __init__(self, task_id: str, filters: int, step: int):
        super().__init__(f"task {task_id}: {filters} filters cannot drop a step of {step} and keep {step}")
        self.task_id = task_id
        self.filters = filters
        self.step = step


@dataclass(frozen=True)
class PruneDecision:
    task_id: str
    step: int
    count: int
    remaining_after: int

    def as_dict(self) -> dict:
        return asdict(self)


def axis_step(splits) -> int:
    """Fewest filters whose removal decrements one factor of ``splits`` by one."""
    if not splits:
        raise ScheduleError("empty split list")
    return prod(splits) // max(splits)


def min_prune_step(program: Program) -> int:
    return lcm(axis_step(program.ff_splits), axis_step(program.ax3_splits))


def decide_prune_count(task: Task, program: Program, multiplier: int = 1) -> PruneDecision:
    """``multiplier`` steps, clamped so at least one step of filters survives."""
    if multiplier < 1:
        raise ValueError("multiplier must be >= 1")
    step = min_prune_step(program)
    filters = task.filters
    if filters - step < step:
        raise TaskExhausted(task.id, filters, step)
    most = (filters - step) // step * step
    count = min(multiplier * step, most)
    return PruneDecision(task.id, step, count, filters - count)
