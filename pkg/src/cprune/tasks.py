"""Task extraction: group structurally identical subgraphs and rank them."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .graph.partition import Subgraph

if TYPE_CHECKING:
    from .tuner.program import Program

__all__ = [
    "TaskError",
    "TaskSignature",
    "Task",
    "TaskTable",
    "signature_of",
    "extract_tasks",
    "pruning_impact",
    "order_tasks",
    "table_to_dict",
]


class TaskError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class TaskSignature:
    input_channels: int
    input_spatial: Tuple[int, int]
    kernel: Tuple[int, int]
    stride: Tuple[int, int]
    filters: int
    fused_ops: Tuple[bool, bool, bool]

    def as_dict(self) -> Dict[str, Any]:
        bn, relu, add = self.fused_ops
        return {
            "input_channels": self.input_channels,
            "input_spatial": list(self.input_spatial),
            "kernel": list(self.kernel),
            "stride": list(self.stride),
            "filters": self.filters,
            "has_bn": bn,
            "has_relu": relu,
            "has_add": add,
        }


def signature_of(sg: Subgraph) -> TaskSignature:
    c_in, spatial, kernel, stride, filters = sg.shape_summary
    return TaskSignature(c_in, tuple(spatial), tuple(kernel), tuple(stride), filters, sg.fused_ops.as_tuple())


@dataclass(frozen=True)
class Task:
    id: str
    signature: TaskSignature
    subgraph_ids: Tuple[str, ...]
    fastest_program: Optional["Program"] = None

    @property
    def latency(self):
        return None if self.fastest_program is None else self.fastest_program.estimated_latency

    @property
    def filters(self) -> int:
        return self.signature.filters

    @property
    def index(self) -> int:
        return int(self.id[1:])


@dataclass(frozen=True)
class TaskTable:
    tasks: Tuple[Task, ...]
    subgraph_to_task: Mapping[str, str]
    subgraphs: Mapping[str, Subgraph] = field(default_factory=dict)

    def task(self, task_id: str) -> Task:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise TaskError(f"unknown task {task_id!r}")

    def anchors(self, task_id: str) -> List[str]:
        return [self.subgraphs[s].anchor_conv for s in self.task(task_id).subgraph_ids]

    @property
    def tuned(self) -> bool:
        return all(t.fastest_program is not None for t in self.tasks)

    def with_programs(self, programs: Mapping[str, "Program"]) -> "TaskTable":
        tasks = tuple(dataclasses.replace(t, fastest_program=programs.get(t.id, t.fastest_program)) for t in self.tasks)
        return TaskTable(tasks, self.subgraph_to_task, self.subgraphs)


def extract_tasks(subgraphs: Sequence[Subgraph]) -> TaskTable:
    """Signature equivalence classes, numbered ``T1, T2, ...`` by first appearance."""
    if not subgraphs:
        raise TaskError("no subgraphs to extract tasks from")
    ids = [s.id for s in subgraphs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise TaskError(f"duplicate subgraph ids {dupes}")
    members: Dict[TaskSignature, List[str]] = {}
    for sg in subgraphs:
        members.setdefault(signature_of(sg), []).append(sg.id)
    tasks, mapping = [], {}
    for i, (sig, sids) in enumerate(members.items(), start=1):
        tasks.append(Task(f"T{i}", sig, tuple(sids)))
        for s in sids:
            mapping[s] = f"T{i}"
    return TaskTable(tuple(tasks), mapping, {s.id: s for s in subgraphs})


def pruning_impact(task: Task):
    """Task latency times the number of subgraphs sharing it."""
    if task.latency is None:
        raise TaskError(f"task {task.id} has not been tuned")
    return task.latency * len(task.subgraph_ids)


def order_tasks(table: TaskTable) -> List[str]:
    """Task ids by descending pruning impact, ties to the lower task number."""
    keyed = [(pruning_impact(t), t.index, t.id) for t in table.tasks]
    keyed.sort(key=lambda k: (-k[0], k[1]))
    return [k[2] for k in keyed]


def table_to_dict(table: TaskTable) -> List[Dict[str, Any]]:
    rows = []
    for t in table.tasks:
        p = t.fastest_program
        rows.append(
            {
                "task": t.id,
                "signature": t.signature.as_dict(),
                "subgraphs": list(t.subgraph_ids),
                "anchors": table.anchors(t.id) if table.subgraphs else [],
                "ff_splits": None if p is None else list(p.ff_splits),
                "ax3_splits": None if p is None else list(p.ax3_splits),
                "latency": None if p is None else float(p.estimated_latency),
                "impact": None if p is None else float(pruning_impact(t)),
            }
        )
    return rows
