"""Schedule enumeration and exhaustive tuning."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

from ..tasks import Task, TaskError, TaskSignature, TaskTable
from .costmodel import ax3_cost, ff_cost
from ..intmath import ordered_factorizations
from .profile import DeviceProfile
from .program import Program

__all__ = ["DEFAULT_BUDGET", "DEFAULT_MAX_DEPTH", "enumerate_schedules", "tune_task", "tune_table", "model_latency"]

DEFAULT_MAX_DEPTH = 3
DEFAULT_BUDGET = 100_000


def _signature(task) -> TaskSignature:
    return task.signature if isinstance(task, Task) else task


def enumerate_schedules(task: Task, profile: DeviceProfile, budget: int = DEFAULT_BUDGET, max_depth: int = DEFAULT_MAX_DEPTH) -> List[Program]:
    """Candidate programs in lexicographic ``(ff_splits, ax3_splits)`` order.

    Both axes range over every ordered factorization of the filter count into
    at most ``max_depth`` factors; the list is cut after ``budget`` entries.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    facs = ordered_factorizations(_signature(task).filters, max_depth)
    out = []
    for ff in facs:
        for ax3 in facs:
            if len(out) == budget:
                return out
            out.append(Program(ff, ax3))
    return out


def _first_min(values) -> Tuple[int, Fraction]:
    best_i, best_v = 0, values[0]
    for i, v in enumerate(values):
        if v < best_v:
            best_i, best_v = i, v
    return best_i, best_v


@lru_cache(maxsize=None)
def _tune(sig: TaskSignature, profile: DeviceProfile, budget: int, max_depth: int) -> Program:
    # The model is a sum of an ff term and an ax3 term, so the argmin over a
    # lexicographic prefix of the pair grid is found row by row.
    facs = ordered_factorizations(sig.filters, max_depth)
    n = len(facs)
    full_rows = min(n, budget // n)
    partial = 0 if full_rows == n else budget - full_rows * n
    rows = full_rows + (1 if partial else 0)
    a = [ff_cost(facs[i], sig, profile) for i in range(rows)]
    b = [ax3_cost(f, sig, profile) for f in facs[: n if full_rows else partial]]
    best_full = _first_min(b) if full_rows else None
    best_part = _first_min(b[:partial]) if partial else None
    best = None
    for i in range(rows):
        j, bv = best_full if i < full_rows else best_part
        total = a[i] + bv
        if best is None or total < best[0]:
            best = (total, i, j)
    total, i, j = best
    return Program(facs[i], facs[j], estimated_latency=total)


def tune_task(task: Task, profile: DeviceProfile, budget: int = DEFAULT_BUDGET, max_depth: int = DEFAULT_MAX_DEPTH) -> Program:
    """Fastest candidate of :func:`enumerate_schedules`, ties to the smallest key.

    Results are memoized per (signature, profile, budget, max_depth).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    return _tune(_signature(task), profile, budget, max_depth)


def tune_table(table: TaskTable, profile: DeviceProfile, budget: int = DEFAULT_BUDGET, max_depth: int = DEFAULT_MAX_DEPTH) -> TaskTable:
    return table.with_programs({t.id: tune_task(t, profile, budget, max_depth) for t in table.tasks})


def model_latency(table: TaskTable):
    """Sum over tasks of latency times subgraph count."""
    total = Fraction(0)
    for t in table.tasks:
        if t.latency is None:
            raise TaskError(f"task {t.id} has not been tuned")
        total += t.latency * len(t.subgraph_ids)
    return total
