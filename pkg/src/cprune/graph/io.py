"""JSON model spec reading and writing.

Top-level keys: ``name``, ``weight_seed``, ``nodes``, ``edges`` (list of
``[producer, consumer]``), ``dependency_groups`` (list of conv id lists).

Per node kind:

* ``input``: ``channels``, ``spatial`` ``[h, w]``
* ``conv2d``: ``filters``, ``input_channels``, ``kernel``, ``stride``,
  ``input_spatial``; optional ``weights`` (nested list, filters x channels x
  kh x kw) with ``original_l1``; optional ``origin`` ``{shape, filter_index,
  channel_index}`` selecting rows/columns of the seed-materialized tensor
* ``pool``: ``stride`` or ``global: true``
* ``dense``: ``units``, ``input_features``
* ``batch_norm``, ``relu``, ``add``: no extra fields
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from .ir import GraphError, LayerNode, ModelGraph

__all__ = ["model_from_dict", "model_to_dict", "load_model", "save_model"]


def _pair(v, default=None):
    if v is None:
        return default
    if isinstance(v, int):
        return (v, v)
    return (int(v[0]), int(v[1]))


def _node_from_dict(d: Dict[str, Any]) -> LayerNode:
    try:
        nid, kind = str(d["id"]), d["kind"]
    except KeyError as exc:
        raise GraphError(f"node entry missing {exc.args[0]!r}: {d}") from None
    if kind == "input":
        return LayerNode(nid, kind, channels=d.get("channels"), spatial=_pair(d.get("spatial")))
    if kind == "conv2d":
        origin = d.get("origin") or {}
        weights = d.get("weights")
        return LayerNode(
            nid,
            kind,
            filters=d.get("filters"),
            input_channels=d.get("input_channels"),
            kernel=_pair(d.get("kernel"), (1, 1)),
            stride=_pair(d.get("stride"), (1, 1)),
            input_spatial=_pair(d.get("input_spatial")),
            weights=None if weights is None else np.asarray(weights, dtype=np.float64),
            original_l1=d.get("original_l1"),
            origin_shape=_pair(origin.get("shape")) if origin else None,
            filter_index=tuple(origin["filter_index"]) if "filter_index" in origin else None,
            channel_index=tuple(origin["channel_index"]) if "channel_index" in origin else None,
        )
    if kind == "pool":
        return LayerNode(nid, kind, stride=_pair(d.get("stride"), (1, 1)), global_pool=bool(d.get("global", False)))
    if kind == "dense":
        return LayerNode(nid, kind, filters=d.get("units"), input_channels=d.get("input_features"))
    return LayerNode(nid, kind)


def model_from_dict(d: Dict[str, Any]) -> ModelGraph:
    if not isinstance(d, dict) or "nodes" not in d:
        raise GraphError("model spec needs a 'nodes' list")
    nodes = tuple(_node_from_dict(n) for n in d["nodes"])
    edges = tuple((str(a), str(b)) for a, b in d.get("edges", ()))
    groups = tuple(tuple(str(m) for m in g) for g in d.get("dependency_groups", ()))
    return ModelGraph(nodes, edges, groups, int(d.get("weight_seed", 0)), str(d.get("name", "model")))


def _node_to_dict(n: LayerNode) -> Dict[str, Any]:
    out: Dict[str, Any] = {"id": n.id, "kind": n.kind}
    if n.kind == "input":
        out.update(channels=n.channels, spatial=list(n.spatial) if n.spatial else None)
    elif n.kind == "conv2d":
        out.update(filters=n.filters, input_channels=n.input_channels, kernel=list(n.kernel), stride=list(n.stride))
        if n.input_spatial is not None:
            out["input_spatial"] = list(n.input_spatial)
        if n.seeded:
            whole = n.filter_index == tuple(range(n.origin_shape[0])) and n.channel_index == tuple(range(n.origin_shape[1]))
            if not whole:
                out["origin"] = {
                    "shape": list(n.origin_shape),
                    "filter_index": list(n.filter_index),
                    "channel_index": list(n.channel_index),
                }
        elif n.weights is not None:
            out["weights"] = n.weights.tolist()
            out["original_l1"] = n.original_l1
    elif n.kind == "pool":
        if n.global_pool:
            out["global"] = True
        else:
            out["stride"] = list(n.stride)
    elif n.kind == "dense":
        out.update(units=n.filters, input_features=n.input_channels)
    return out


def model_to_dict(model: ModelGraph) -> Dict[str, Any]:
    return {
        "name": model.name,
        "weight_seed": model.weight_seed,
        "nodes": [_node_to_dict(n) for n in model.nodes],
        "edges": [list(e) for e in model.edges],
        "dependency_groups": [list(g) for g in model.dependency_groups],
    }


def load_model(path: Union[str, Path], weight_seed: int | None = None) -> ModelGraph:
    """Read a model spec; ``weight_seed`` overrides the file's seed."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: not valid JSON ({exc})") from None
    if weight_seed is not None:
        data = dict(data, weight_seed=weight_seed)
    return model_from_dict(data)


def save_model(model: ModelGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")
