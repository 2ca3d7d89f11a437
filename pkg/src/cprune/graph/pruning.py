"""Structured filter pruning with channel propagation."""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .ir import LayerNode, ModelGraph, conv_l1, validate_graph

__all__ = ["PruneError", "rank_filters_l1", "apply_pruning", "expand_to_groups"]


class PruneError(ValueError):
    pass


def rank_filters_l1(node: LayerNode) -> list[int]:
    """Filter indices ordered by ascending l1 norm, ties by lower index."""
    if not node.is_conv:
        raise PruneError(f"{node.id} is a {node.kind}, only conv2d filters can be ranked")
    if node.weights is None:
        raise PruneError(f"{node.id} has no weights")
    return [int(i) for i in np.argsort(conv_l1(node.weights), kind="stable")]


def expand_to_groups(model: ModelGraph, convs: Iterable[str]) -> set[str]:
    """Close a set of convs under dependency-group membership."""
    out = set()
    for c in convs:
        out.update(model.group_of.get(c, (c,)))
    return out


def _drop(index: Optional[Tuple[int, ...]], positions: Sequence[int]) -> Optional[Tuple[int, ...]]:
    if index is None:
        return None
    gone = set(positions)
    return tuple(v for i, v in enumerate(index) if i not in gone)


def apply_pruning(
    model: ModelGraph,
    target_convs: Iterable[str],
    count: int,
    ranking: Optional[Mapping[str, Sequence[int]]] = None,
) -> ModelGraph:
    """Remove the ``count`` lowest-ranked filters from every target conv.

    Consumers lose the matching input-channel slices. Downstream of an add the
    removed channel positions are taken from the add's first producer, which
    lines the branches up by rank position. ``ranking`` defaults to
    :func:`rank_filters_l1` for any target it does not cover.
    """
    targets = set(target_convs)
    if count < 0:
        raise PruneError("count must be non-negative")
    for t in sorted(targets):
        node = model.node(t)
        if not node.is_conv:
            raise PruneError(f"{t} is not a conv2d")
        missing = set(model.group_of.get(t, ())) - targets
        if missing:
            raise PruneError(f"{t} belongs to a dependency group; also target {sorted(missing)}")
        if count >= node.filters:
            raise PruneError(f"pruning {count} of {node.filters} filters would empty {t}")
    if count == 0 or not targets:
        return model

    ranking = dict(ranking or {})
    removed: Dict[str, Tuple[int, ...]] = {}
    for t in targets:
        order = ranking.get(t)
        if order is None:
            order = rank_filters_l1(model.node(t))
        removed[t] = tuple(sorted(int(i) for i in order[:count]))

    lost: Dict[str, Tuple[int, ...]] = {}
    for nid in model.topo_order():
        node = model.by_id[nid]
        prods = model.producers(nid)
        if node.kind == "conv2d":
            lost[nid] = removed.get(nid, ())
        elif node.kind in ("input", "dense"):
            lost[nid] = ()
        elif node.kind == "add":
            sizes = {p: len(lost[p]) for p in prods}
            if len(set(sizes.values())) > 1:
                raise PruneError(f"add {nid} would join branches with unequal pruning {sizes}")
            lost[nid] = lost[prods[0]]
        else:
            lost[nid] = lost[prods[0]]

    spatial = model.out_spatial()
    changes: Dict[str, LayerNode] = {}
    for nid in model.topo_order():
        node = model.by_id[nid]
        if node.kind not in ("conv2d", "dense"):
            continue
        upstream = lost[model.producers(nid)[0]]
        updates = {}
        w = node.weights
        if nid in removed:
            pos = removed[nid]
            w = np.delete(w, pos, axis=0)
            updates.update(filters=node.filters - len(pos), filter_index=_drop(node.filter_index, pos))
        if upstream:
            if node.is_conv:
                w = np.delete(w, upstream, axis=1)
                updates.update(
                    input_channels=node.input_channels - len(upstream),
                    channel_index=_drop(node.channel_index, upstream),
                )
            else:
                sp = spatial[model.producers(nid)[0]] or (1, 1)
                updates.update(input_channels=node.input_channels - len(upstream) * sp[0] * sp[1])
        if updates:
            if node.is_conv:
                w.flags.writeable = False
                updates["weights"] = w
            changes[nid] = node.replace(**updates)

    result = model.with_nodes(changes)
    problems = validate_graph(result)
    if problems:
        raise PruneError("pruning broke the graph: " + "; ".join(map(str, problems)))
    return result
