"""Embedding edge-colored trees and subdivisions into joined and jumbled graph families."""

__version__ = "0.1.0"

from .errors import (
    CapExceeded,
    ColorEmbedError,
    EmbeddingError,
    ExtensionError,
    GraphError,
    InternalInconsistency,
    JoinednessViolation,
    PreconditionError,
    SearchFailure,
    TargetError,
)
from .graphs import Graph, GraphFamily, build_auxiliary, load_family, save_family
from .certify import JumbledParams, is_joined, jumbled_check, min_joined
from .targets import RootedColoredGraph, build_expansion, build_subdivision, required_path_length
from .engine import Embedding, EngineConfig, GoodnessParams, verify_good
