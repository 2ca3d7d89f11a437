"""Layered DNN graph representation and structural validation."""

from __future__ import annotations

import dataclasses
import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..intmath import ceil_div
from .weights import materialize_weights

__all__ = [
    "KINDS",
    "PASS_THROUGH",
    "GraphError",
    "LayerNode",
    "ModelGraph",
    "Violation",
    "validate_graph",
    "conv_l1",
]

KINDS = ("input", "conv2d", "batch_norm", "relu", "add", "pool", "dense")
PASS_THROUGH = ("batch_norm", "relu", "pool")

Pair = Tuple[int, int]


class GraphError(ValueError):
    """Raised when a graph is malformed or an operation needs a valid graph."""


@dataclass(frozen=True, eq=False)
class LayerNode:
    """One layer of the model.

    ``filters`` and ``input_channels`` are the output / input channel counts
    of a ``conv2d`` and the units / input features of a ``dense`` layer.
    ``channels`` and ``spatial`` describe an ``input`` node. A ``pool`` node
    downsamples by ``stride`` or collapses to 1x1 when ``global_pool`` is set.

    Seed-materialized conv weights remember which filters and input channels
    of the original tensor survive pruning (``filter_index``/``channel_index``)
    so a pruned model can be written back without inline weights.
    """

    id: str
    kind: str
    filters: Optional[int] = None
    input_channels: Optional[int] = None
    kernel: Pair = (1, 1)
    stride: Pair = (1, 1)
    input_spatial: Optional[Pair] = None
    channels: Optional[int] = None
    spatial: Optional[Pair] = None
    global_pool: bool = False
    weights: Optional[np.ndarray] = field(default=None, repr=False)
    seeded: bool = False
    origin_shape: Optional[Tuple[int, int]] = None
    filter_index: Optional[Tuple[int, ...]] = field(default=None, repr=False)
    channel_index: Optional[Tuple[int, ...]] = field(default=None, repr=False)
    original_l1: Optional[float] = None

    @property
    def is_conv(self) -> bool:
        return self.kind == "conv2d"

    @property
    def output_spatial(self) -> Optional[Pair]:
        if self.input_spatial is None:
            return None
        return (ceil_div(self.input_spatial[0], self.stride[0]), ceil_div(self.input_spatial[1], self.stride[1]))

    def replace(self, **changes) -> "LayerNode":
        return dataclasses.replace(self, **changes)


def conv_l1(weights: np.ndarray) -> np.ndarray:
    """Per-filter sum of absolute weights."""
    return np.abs(weights).reshape(weights.shape[0], -1).sum(axis=1)


def _dims_ok(node: LayerNode) -> bool:
    vals = [node.filters, node.input_channels, *node.kernel, *node.stride]
    return all(isinstance(v, int) and v >= 1 for v in vals)


def _seed_node(node: LayerNode, seed: int) -> LayerNode:
    """Fill in weights for a conv without inline values."""
    if not node.is_conv or not _dims_ok(node):
        return node
    if node.weights is not None:
        w = np.asarray(node.weights, dtype=np.float64)
        if w.flags.writeable:
            w = w.copy()
            w.flags.writeable = False
        l1 = node.original_l1 if node.original_l1 is not None else float(np.abs(w).sum())
        return node.replace(weights=w, original_l1=l1)
    shape0 = node.origin_shape or (node.filters, node.input_channels)
    full = materialize_weights(seed, node.id, (shape0[0], shape0[1], node.kernel[0], node.kernel[1]))
    fidx = node.filter_index if node.filter_index is not None else tuple(range(shape0[0]))
    cidx = node.channel_index if node.channel_index is not None else tuple(range(shape0[1]))
    w = full[np.asarray(fidx, dtype=np.int64)][:, np.asarray(cidx, dtype=np.int64)]
    w.flags.writeable = False
    return node.replace(
        weights=w,
        seeded=True,
        origin_shape=tuple(shape0),
        filter_index=tuple(fidx),
        channel_index=tuple(cidx),
        original_l1=float(np.abs(full).sum()),
    )


@dataclass(frozen=True, eq=False)
class ModelGraph:
    """A DAG of layers plus the conv groups whose filter counts move together.

    Conv nodes without weights are materialized from ``weight_seed`` on
    construction; graphs are treated as immutable afterwards.
    """

    nodes: Tuple[LayerNode, ...]
    edges: Tuple[Tuple[str, str], ...]
    dependency_groups: Tuple[Tuple[str, ...], ...] = ()
    weight_seed: int = 0
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(_seed_node(n, self.weight_seed) for n in self.nodes))
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        object.__setattr__(self, "dependency_groups", tuple(tuple(g) for g in self.dependency_groups))

    @cached_property
    def by_id(self) -> Dict[str, LayerNode]:
        return {n.id: n for n in self.nodes}

    def node(self, node_id: str) -> LayerNode:
        try:
            return self.by_id[node_id]
        except KeyError:
            raise GraphError(f"unknown node {node_id!r}") from None

    @cached_property
    def _producers(self) -> Dict[str, List[str]]:
        out: Dict[str, List[str]] = {n.id: [] for n in self.nodes}
        for a, b in self.edges:
            out.setdefault(b, []).append(a)
        return out

    @cached_property
    def _consumers(self) -> Dict[str, List[str]]:
        out: Dict[str, List[str]] = {n.id: [] for n in self.nodes}
        for a, b in self.edges:
            out.setdefault(a, []).append(b)
        return out

    def producers(self, node_id: str) -> List[str]:
        return self._producers.get(node_id, [])

    def consumers(self, node_id: str) -> List[str]:
        return self._consumers.get(node_id, [])

    @property
    def conv_ids(self) -> List[str]:
        return [n.id for n in self.nodes if n.is_conv]

    @cached_property
    def group_of(self) -> Dict[str, Tuple[str, ...]]:
        return {m: g for g in self.dependency_groups for m in g}

    def topo_order(self) -> List[str]:
        """Kahn's algorithm; among ready nodes the earliest declared goes first."""
        rank = {n.id: i for i, n in enumerate(self.nodes)}
        indeg = {n.id: 0 for n in self.nodes}
        for a, b in self.edges:
            if a in indeg and b in indeg:
                indeg[b] += 1
        heap = [(rank[i], i) for i, d in indeg.items() if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            _, cur = heapq.heappop(heap)
            order.append(cur)
            for nxt in self.consumers(cur):
                if nxt in indeg:
                    indeg[nxt] -= 1
                    if indeg[nxt] == 0:
                        heapq.heappush(heap, (rank[nxt], nxt))
        if len(order) != len(self.nodes):
            raise GraphError("graph contains a cycle")
        return order

    def out_channels(self) -> Dict[str, Optional[int]]:
        """Channel count produced by every node (None where undefined)."""
        chans: Dict[str, Optional[int]] = {}
        for nid in self.topo_order():
            n = self.by_id[nid]
            prods = self.producers(nid)
            if n.kind == "input":
                chans[nid] = n.channels
            elif n.kind in ("conv2d", "dense"):
                chans[nid] = n.filters
            else:
                chans[nid] = chans.get(prods[0]) if prods else None
        return chans

    def out_spatial(self) -> Dict[str, Optional[Pair]]:
        sp: Dict[str, Optional[Pair]] = {}
        for nid in self.topo_order():
            n = self.by_id[nid]
            prods = self.producers(nid)
            src = sp.get(prods[0]) if prods else None
            if n.kind == "input":
                sp[nid] = tuple(n.spatial) if n.spatial else None
            elif n.kind == "conv2d":
                sp[nid] = n.output_spatial
            elif n.kind == "dense":
                sp[nid] = (1, 1)
            elif n.kind == "pool" and src is not None:
                sp[nid] = (1, 1) if n.global_pool else (ceil_div(src[0], n.stride[0]), ceil_div(src[1], n.stride[1]))
            else:
                sp[nid] = src
        return sp

    def channel_origins(self) -> Dict[str, frozenset]:
        """Nodes whose output channels flow unchanged into each node's output."""
        orig: Dict[str, frozenset] = {}
        for nid in self.topo_order():
            n = self.by_id[nid]
            if n.kind in ("input", "conv2d", "dense"):
                orig[nid] = frozenset([nid])
            else:
                acc = frozenset()
                for p in self.producers(nid):
                    acc |= orig.get(p, frozenset())
                orig[nid] = acc
        return orig

    def with_nodes(self, replacements: Mapping[str, LayerNode]) -> "ModelGraph":
        nodes = tuple(replacements.get(n.id, n) for n in self.nodes)
        return ModelGraph(nodes, self.edges, self.dependency_groups, self.weight_seed, self.name)


@dataclass(frozen=True)
class Violation:
    code: str
    nodes: Tuple[str, ...]
    message: str

    def __str__(self) -> str:
        return f"{self.code} [{', '.join(self.nodes)}]: {self.message}"


_ARITY = {"input": (0, 0), "conv2d": (1, 1), "batch_norm": (1, 1), "relu": (1, 1), "pool": (1, 1), "dense": (1, 1)}


def validate_graph(model: ModelGraph) -> List[Violation]:
    """Every broken structural invariant of ``model``; empty when well-formed."""
    out: List[Violation] = []
    ids = [n.id for n in model.nodes]
    seen = set()
    for i in ids:
        if i in seen:
            out.append(Violation("duplicate-id", (i,), "node id declared twice"))
        seen.add(i)
    for a, b in model.edges:
        for x in (a, b):
            if x not in seen:
                out.append(Violation("unknown-node", (x,), f"edge {a}->{b} references an undeclared node"))
    for n in model.nodes:
        if n.kind not in KINDS:
            out.append(Violation("bad-kind", (n.id,), f"unknown kind {n.kind!r}"))
    if out:
        return out

    try:
        model.topo_order()
    except GraphError:
        on_cycle = _cycle_nodes(model)
        return out + [Violation("cycle", tuple(on_cycle), "edges do not form a DAG")]

    for n in model.nodes:
        k = len(model.producers(n.id))
        lo, hi = _ARITY.get(n.kind, (2, None))
        if k < lo or (hi is not None and k > hi):
            code = "no-producer" if k == 0 else "arity"
            out.append(Violation(code, (n.id,), f"{n.kind} has {k} producer(s)"))
        if n.kind in ("conv2d", "dense"):
            if not (isinstance(n.filters, int) and n.filters >= 1 and isinstance(n.input_channels, int) and n.input_channels >= 1):
                out.append(Violation("bad-dims", (n.id,), "filters and input_channels must be >= 1"))
        if n.is_conv:
            if not _dims_ok(n):
                out.append(Violation("bad-dims", (n.id,), "kernel and stride dims must be >= 1"))
            elif n.weights is None or tuple(n.weights.shape) != (n.filters, n.input_channels, *n.kernel):
                shape = None if n.weights is None else tuple(n.weights.shape)
                out.append(Violation("weight-shape", (n.id,), f"weights {shape} do not match declared dims"))
        if n.kind == "input" and not (isinstance(n.channels, int) and n.channels >= 1):
            out.append(Violation("bad-dims", (n.id,), "input channels must be >= 1"))
    if out:
        return out

    chans = model.out_channels()
    spatial = model.out_spatial()
    for n in model.nodes:
        prods = model.producers(n.id)
        if n.is_conv:
            p = prods[0]
            if chans[p] != n.input_channels:
                out.append(Violation("channel-mismatch", (p, n.id), f"{n.id} expects {n.input_channels} input channels, {p} provides {chans[p]}"))
            if n.input_spatial is not None and spatial[p] is not None and tuple(n.input_spatial) != tuple(spatial[p]):
                out.append(Violation("spatial-mismatch", (p, n.id), f"{n.id} expects {n.input_spatial}, {p} provides {spatial[p]}"))
        elif n.kind == "dense":
            p = prods[0]
            sp = spatial[p] or (1, 1)
            feats = None if chans[p] is None else chans[p] * sp[0] * sp[1]
            if feats != n.input_channels:
                out.append(Violation("channel-mismatch", (p, n.id), f"{n.id} expects {n.input_channels} features, {p} provides {feats}"))
        elif n.kind == "add":
            got = {p: chans[p] for p in prods}
            if len(set(got.values())) > 1:
                out.append(Violation("channel-mismatch", tuple(prods) + (n.id,), f"add inputs disagree on channels {got}"))
            shapes = {tuple(spatial[p]) for p in prods if spatial[p] is not None}
            if len(shapes) > 1:
                out.append(Violation("spatial-mismatch", tuple(prods) + (n.id,), f"add inputs disagree on spatial dims {shapes}"))

    grouped = set()
    for g in model.dependency_groups:
        for m in g:
            if m not in model.by_id or not model.by_id[m].is_conv:
                out.append(Violation("group-member", (m,), "dependency group member is not a conv node"))
            elif m in grouped:
                out.append(Violation("group-member", (m,), "conv appears in more than one dependency group"))
            grouped.add(m)
        counts = {m: model.by_id[m].filters for m in g if m in model.by_id}
        if len(set(counts.values())) > 1:
            out.append(Violation("group-mismatch", tuple(g), f"dependency group filter counts differ {counts}"))
    return out


def _cycle_nodes(model: ModelGraph) -> List[str]:
    """Nodes left over after peeling all sources and sinks."""
    alive = {n.id for n in model.nodes}
    changed = True
    while changed:
        changed = False
        for nid in sorted(alive):
            ins = [a for a in model.producers(nid) if a in alive]
            outs = [b for b in model.consumers(nid) if b in alive]
            if not ins or not outs:
                alive.discard(nid)
                changed = True
    return sorted(alive)


def require_valid(model: ModelGraph) -> None:
    problems = validate_graph(model)
    if problems:
        raise GraphError("invalid model: " + "; ".join(map(str, problems)))
