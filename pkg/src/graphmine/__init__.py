"""Parallel graph mining by filter-process exploration of canonical embeddings."""

from .apps import (
    CliqueFinding,
    Domain,
    FrequentSubgraphMining,
    MotifCounting,
    is_clique,
    support,
)
from .canonical import canonical_form, is_canonical, is_canonical_extension
from .embedding import EDGE_INDUCED, VERTEX_INDUCED, Embedding, ExplorationMode
from .engine import Application, Context, Engine, EngineConfig, RunResult, run
from .graph import InputGraph, load_graph
from .odag import Odag
from .pattern import Pattern, canonical_pattern, quick_pattern

__version__ = "0.1.0"

__all__ = [
    "EDGE_INDUCED",
    "VERTEX_INDUCED",
    "Application",
    "CliqueFinding",
    "Context",
    "Domain",
    "Embedding",
    "Engine",
    "EngineConfig",
    "ExplorationMode",
    "FrequentSubgraphMining",
    "InputGraph",
    "MotifCounting",
    "Odag",
    "Pattern",
    "RunResult",
    "canonical_form",
    "canonical_pattern",
    "is_canonical",
    "is_canonical_extension",
    "is_clique",
    "load_graph",
    "quick_pattern",
    "run",
    "support",
]
