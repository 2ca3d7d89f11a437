from .ir import GraphError, LayerNode, ModelGraph, Violation, conv_l1, require_valid, validate_graph
from .io import load_model, model_from_dict, model_to_dict, save_model
from .partition import FusedOps, Subgraph, partition_subgraphs
from .pruning import PruneError, apply_pruning, expand_to_groups, rank_filters_l1

__all__ = [
    "GraphError",
    "LayerNode",
    "ModelGraph",
    "Violation",
    "conv_l1",
    "require_valid",
    "validate_graph",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "FusedOps",
    "Subgraph",
    "partition_subgraphs",
    "PruneError",
    "apply_pruning",
    "expand_to_groups",
    "rank_filters_l1",
]
