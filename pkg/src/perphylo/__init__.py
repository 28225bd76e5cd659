"""Persistent perfect phylogeny toolkit.

Decides whether a binary species/character matrix admits a rooted tree in
which every character is gained on at most one edge and lost on at most one
edge further down the same path, constructs and serializes the tree when one
exists, and ships an exhaustive oracle plus a seeded instance generator for
validation.
"""

from ._engine import backend_name
from .matrix import (
    BinaryMatrix,
    Completion,
    ConflictGraph,
    ExtendedMatrix,
    MatrixFormatError,
    build_extended,
    conflict_graph,
    four_gametes,
    has_forbidden_submatrix,
    load_matrix,
)
from .oracle import GeneratorParams, count_conflicts, generate_instance, oracle_solve
from .phylo import (
    PerfectPhylogeny,
    PersistentPhylogeny,
    build_perfect_phylogeny,
    parse_edgelist,
    serialize,
    to_persistent,
    verify_persistent,
)
from .redblack import RealizationLog, RedBlackGraph, replay
from .search import SearchOptions, SolveOutcome, Status, decide_pp

__version__ = "0.1.0"

__all__ = [
    "BinaryMatrix",
    "Completion",
    "ConflictGraph",
    "ExtendedMatrix",
    "GeneratorParams",
    "MatrixFormatError",
    "PerfectPhylogeny",
    "PersistentPhylogeny",
    "RealizationLog",
    "RedBlackGraph",
    "SearchOptions",
    "SolveOutcome",
    "Status",
    "backend_name",
    "build_extended",
    "build_perfect_phylogeny",
    "conflict_graph",
    "count_conflicts",
    "decide_pp",
    "four_gametes",
    "generate_instance",
    "has_forbidden_submatrix",
    "load_matrix",
    "oracle_solve",
    "parse_edgelist",
    "replay",
    "serialize",
    "to_persistent",
    "verify_persistent",
]
