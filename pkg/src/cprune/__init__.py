"""Schedule-aware structured filter pruning on an analytical device model."""

from pathlib import Path

from .prune_step import PruneDecision, TaskExhausted, decide_prune_count, min_prune_step
from .tasks import Task, TaskSignature, TaskTable, extract_tasks, order_tasks, pruning_impact

FIXTURES = Path(__file__).parent / "fixtures"


def fixture(name: str) -> Path:
    """Path of a bundled fixture file."""
    path = FIXTURES / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return path


__all__ = [
    "FIXTURES",
    "fixture",
    "PruneDecision",
    "TaskExhausted",
    "decide_prune_count",
    "min_prune_step",
    "Task",
    "TaskSignature",
    "TaskTable",
    "extract_tasks",
    "order_tasks",
    "pruning_impact",
]
