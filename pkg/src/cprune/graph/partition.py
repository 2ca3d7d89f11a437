"""Conv-anchored subgraph partitioning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .ir import GraphError, ModelGraph, require_valid

__all__ = ["FusedOps", "Subgraph", "partition_subgraphs"]


@dataclass(frozen=True)
class FusedOps:
    has_bn: bool = False
    has_relu: bool = False
    has_add: bool = False

    def as_tuple(self) -> Tuple[bool, bool, bool]:
        return (self.has_bn, self.has_relu, self.has_add)


@dataclass(frozen=True)
class Subgraph:
    """A conv plus the elementwise/pool ops it absorbs.

    ``shape_summary`` is ``(input_channels, input_spatial, kernel, stride,
    filters)`` of the anchor conv.
    """

    id: str
    anchor_conv: str
    fused_ops: FusedOps
    shape_summary: Tuple[int, Tuple[int, int], Tuple[int, int], Tuple[int, int], int]

    @property
    def filters(self) -> int:
        return self.shape_summary[4]


def _absorbed(model: ModelGraph, conv_id: str) -> List[str]:
    """Non-conv nodes fused behind ``conv_id``.

    Fusion follows consumers until the next conv or dense layer and stops
    after a node whose output fans out, so a block's trailing relu does not
    pull in the next block's add.
    """
    seen, stack, out = {conv_id}, list(model.consumers(conv_id)), []
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        node = model.by_id[nid]
        if node.kind in ("conv2d", "dense", "input"):
            continue
        out.append(nid)
        nxt = model.consumers(nid)
        if len(nxt) == 1:
            stack.extend(nxt)
    return out


def partition_subgraphs(model: ModelGraph) -> List[Subgraph]:
    """One subgraph per conv, numbered ``S1, S2, ...`` in topological order."""
    require_valid(model)
    spatial = model.out_spatial()
    result = []
    for nid in model.topo_order():
        node = model.by_id[nid]
        if not node.is_conv:
            continue
        kinds = {model.by_id[x].kind for x in _absorbed(model, nid)}
        fused = FusedOps("batch_norm" in kinds, "relu" in kinds, "add" in kinds)
        src = model.producers(nid)[0]
        in_sp = tuple(node.input_spatial) if node.input_spatial is not None else spatial[src]
        if in_sp is None:
            raise GraphError(f"conv {nid} has no known input spatial size")
        summary = (node.input_channels, tuple(in_sp), tuple(node.kernel), tuple(node.stride), node.filters)
        result.append(Subgraph(f"S{len(result) + 1}", nid, fused, summary))
    return result
