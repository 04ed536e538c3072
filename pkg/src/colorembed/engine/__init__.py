"""Good embeddings and the roll-back operations that maintain them."""

from .embedding import (
    MODES,
    Embedding,
    EngineConfig,
    GoodnessParams,
    check_extension,
    delta_residual,
    residual,
    revalidate,
)
from .extension import (
    add_edge,
    connect_path,
    embed_path_constructible,
    embed_tree_anchored,
    extend_forest,
    extend_vertex,
    milestone,
    new_embedding,
    remove_leaf,
)
from .goodness import GoodnessReport, enumerate_low, greedy_violator, subset_count, verify_good

__all__ = [
    "MODES",
    "Embedding",
    "EngineConfig",
    "GoodnessParams",
    "GoodnessReport",
    "add_edge",
    "check_extension",
    "connect_path",
    "delta_residual",
    "embed_path_constructible",
    "embed_tree_anchored",
    "enumerate_low",
    "extend_forest",
    "extend_vertex",
    "greedy_violator",
    "milestone",
    "new_embedding",
    "remove_leaf",
    "residual",
    "revalidate",
    "subset_count",
    "verify_good",
]
