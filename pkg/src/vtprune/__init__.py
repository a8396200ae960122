"""Debiased-attention, diversity-aware visual token pruning engine.

Operates on serialized token dumps (an h×w grid of feature vectors plus one
attention value per cell): divides attention by a calibrated positional bias
prior, builds a hybrid semantic/spatial redundancy graph, and greedily picks
a budget of tokens that are important and mutually non-redundant.
"""

from .core import (
    AttentionGrid,
    PruneConfig,
    TokenSet,
    grid_neighbors,
    resolve_budget,
)
from .debias import BiasPrior, calibrate_bias, relative_attention, resize_bias
from .estimator import AttentionDebiaser, TokenPruner
from .graph import (
    AdjacencyGraph,
    build_graph,
    fuse_similarity,
    minmax_normalize,
    semantic_similarity,
    spatial_adjacency,
    threshold_graph,
)
from .selection import SelectionResult, pivot_count, select_tokens
from .synth import SceneSpec, generate_scene

__version__ = "0.1.0"

__all__ = [
    "AttentionGrid",
    "PruneConfig",
    "TokenSet",
    "grid_neighbors",
    "resolve_budget",
    "BiasPrior",
    "calibrate_bias",
    "relative_attention",
    "resize_bias",
    "AdjacencyGraph",
    "build_graph",
    "fuse_similarity",
    "minmax_normalize",
    "semantic_similarity",
    "spatial_adjacency",
    "threshold_graph",
    "SelectionResult",
    "pivot_count",
    "select_tokens",
    "SceneSpec",
    "generate_scene",
    "AttentionDebiaser",
    "TokenPruner",
    "__version__",
]
