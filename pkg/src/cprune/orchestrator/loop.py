"""The prune / tune / accept loop."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Set

from ..graph.ir import ModelGraph, require_valid
from ..graph.partition import partition_subgraphs
from ..graph.pruning import PruneError, apply_pruning, expand_to_groups
from ..prune_step import TaskExhausted, decide_prune_count
from ..tasks import TaskTable, extract_tasks, order_tasks
from ..tuner.profile import DeviceProfile
from ..tuner.search import DEFAULT_BUDGET, DEFAULT_MAX_DEPTH, model_latency, tune_table
from .oracle import AccuracyOracle

__all__ = [
    "ACCEPTED",
    "REJECTED_LATENCY",
    "REJECTED_ACCURACY",
    "EXHAUSTED",
    "OUTCOMES",
    "PruneState",
    "TraceRecord",
    "CPruneResult",
    "build_table",
    "initialize",
    "run_cprune",
]

log = logging.getLogger(__name__)

ACCEPTED = "accepted"
REJECTED_LATENCY = "rejected_latency"
REJECTED_ACCURACY = "rejected_accuracy_task_removed"
EXHAUSTED = "exhausted_task_removed"
OUTCOMES = (ACCEPTED, REJECTED_LATENCY, REJECTED_ACCURACY, EXHAUSTED)


@dataclass
class PruneState:
    """Loop variables plus the fixed knobs of one run.

    ``l_t`` is the latency the next candidate must beat, ``a_p`` the short-term
    accuracy of the last committed model. ``removed`` holds anchor convs of
    tasks dropped from the candidate list; they stay dropped after commits.
    """

    model: ModelGraph
    table: TaskTable
    ordered_tasks: List[str]
    l_t: Fraction
    a_p: float
    alpha: float
    beta: float
    a_g: float
    profile: DeviceProfile
    oracle: AccuracyOracle
    multiplier: int = 1
    budget: int = DEFAULT_BUDGET
    max_depth: int = DEFAULT_MAX_DEPTH
    iteration: int = 0
    l_initial: Fraction = Fraction(0)
    a_initial: float = 0.0
    removed: Set[str] = field(default_factory=set)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    candidate_task: str
    anchors: List[str]
    step: Optional[int]
    count: Optional[int]
    l_m: Optional[float]
    l_t: float
    l_initial: float
    a_s: Optional[float]
    a_p: float
    outcome: str

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class CPruneResult:
    model: ModelGraph
    table: TaskTable
    trace: List[TraceRecord]
    initial_latency: Fraction
    final_latency: Fraction
    initial_accuracy: float
    final_accuracy: float
    stop_reason: str

    @property
    def latency_ratio(self) -> float:
        return float(self.initial_latency / self.final_latency) if self.final_latency else float("inf")

    def summary(self) -> dict:
        accepted = sum(r.outcome == ACCEPTED for r in self.trace)
        return {
            "initial_latency": float(self.initial_latency),
            "final_latency": float(self.final_latency),
            "latency_ratio": self.latency_ratio,
            "initial_accuracy": self.initial_accuracy,
            "final_accuracy": self.final_accuracy,
            "accepted_iterations": accepted,
            "attempts": len(self.trace),
            "stop_reason": self.stop_reason,
        }


def build_table(model: ModelGraph, profile: DeviceProfile, budget: int = DEFAULT_BUDGET, max_depth: int = DEFAULT_MAX_DEPTH) -> TaskTable:
    """Partition, extract tasks and tune all of them."""
    return tune_table(extract_tasks(partition_subgraphs(model)), profile, budget, max_depth)


def initialize(
    model: ModelGraph,
    a_g: float,
    alpha: float,
    beta: float,
    profile: DeviceProfile,
    oracle: AccuracyOracle,
    multiplier: int = 1,
    budget: int = DEFAULT_BUDGET,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> PruneState:
    if not 0 < a_g < 1:
        raise ValueError("a_g must lie in (0, 1)")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    require_valid(model)
    table = build_table(model, profile, budget, max_depth)
    a_p = oracle(model, "short")
    l_m = model_latency(table)
    return PruneState(
        model=model,
        table=table,
        ordered_tasks=order_tasks(table),
        l_t=_scale(beta, l_m),
        a_p=a_p,
        alpha=alpha,
        beta=beta,
        a_g=a_g,
        profile=profile,
        oracle=oracle,
        multiplier=multiplier,
        budget=budget,
        max_depth=max_depth,
        l_initial=l_m,
        a_initial=a_p,
    )


def _scale(ratio: float, latency: Fraction) -> Fraction:
    # ratios come from config files as short decimals; keep them exact
    return Fraction(str(ratio)) * latency


def _candidates(table: TaskTable, removed: Set[str]) -> List[str]:
    return [t for t in order_tasks(table) if not removed.intersection(table.anchors(t))]


def run_cprune(state: PruneState, on_record: Optional[Callable[[TraceRecord], None]] = None) -> CPruneResult:
    """Iterate until the accuracy goal is reached or no candidate task is left.

    A full pass over the candidates that neither commits nor drops a task
    ends the loop, since repeating it would retrace the same attempts.
    """
    trace: List[TraceRecord] = []

    def emit(**kw):
        rec = TraceRecord(iteration=state.iteration, l_t=float(state.l_t), l_initial=float(state.l_initial), a_p=state.a_p, **kw)
        trace.append(rec)
        if on_record is not None:
            on_record(rec)
        log.debug("%s", rec)

    stop = "accuracy_goal" if state.a_p <= state.a_g else "no_tasks"
    while state.a_p > state.a_g and state.ordered_tasks:
        state.iteration += 1
        committed = dropped = False
        for r in list(state.ordered_tasks):
            task = state.table.task(r)
            anchors = state.table.anchors(r)
            program = task.fastest_program
            try:
                decision = decide_prune_count(task, program, state.multiplier)
                targets = expand_to_groups(state.model, anchors)
                candidate = apply_pruning(state.model, targets, decision.count)
            except (TaskExhausted, PruneError) as exc:
                log.info("dropping %s: %s", r, exc)
                step = exc.step if isinstance(exc, TaskExhausted) else None
                emit(candidate_task=r, anchors=anchors, step=step, count=None, l_m=None, a_s=None, outcome=EXHAUSTED)
                state.ordered_tasks.remove(r)
                state.removed.update(anchors)
                dropped = True
                continue

            new_table = tune_table(extract_tasks(partition_subgraphs(candidate)), state.profile, state.budget, state.max_depth)
            l_m = model_latency(new_table)
            common = dict(candidate_task=r, anchors=anchors, step=decision.step, count=decision.count, l_m=float(l_m))
            if l_m >= state.l_t:
                emit(a_s=None, outcome=REJECTED_LATENCY, **common)
                continue
            a_s = state.oracle(candidate, "short")
            if a_s < state.alpha * state.a_p:
                emit(a_s=a_s, outcome=REJECTED_ACCURACY, **common)
                state.ordered_tasks.remove(r)
                state.removed.update(anchors)
                dropped = True
                continue
            emit(a_s=a_s, outcome=ACCEPTED, **common)
            state.model = candidate
            state.table = new_table
            state.ordered_tasks = _candidates(new_table, state.removed)
            state.l_t = _scale(state.beta, l_m)
            state.a_p = a_s
            committed = True
            break
        if state.a_p <= state.a_g:
            stop = "accuracy_goal"
        elif not state.ordered_tasks:
            stop = "no_tasks"
        elif not committed and not dropped:
            stop = "no_progress"
            break

    final_accuracy = state.oracle(state.model, "final")
    final_table = build_table(state.model, state.profile, state.budget, state.max_depth)
    return CPruneResult(
        model=state.model,
        table=final_table,
        trace=trace,
        initial_latency=state.l_initial,
        final_latency=model_latency(final_table),
        initial_accuracy=state.a_initial,
        final_accuracy=final_accuracy,
        stop_reason=stop,
    )
