"""Exact tools for bipartite matching polytopes with one quadratic term."""
from .core import (
    ConvexCombination,
    EnumerationTooLarge,
    GeneralGraph,
    InvalidInstance,
    QMatchError,
    QPoint,
    QProblem,
    enumerate_matchings,
    vertex_set,
)
from .separation import separate_down, separate_exact, separate_up

__version__ = "0.1.0"

__all__ = [
    "ConvexCombination",
    "EnumerationTooLarge",
    "GeneralGraph",
    "InvalidInstance",
    "QMatchError",
    "QPoint",
    "QProblem",
    "enumerate_matchings",
    "separate_down",
    "separate_exact",
    "separate_up",
    "vertex_set",
]
