"""Shortest paths in graphs with matrix-valued edges."""

from .core import (
    ADDITIVE_SCALAR,
    TOTAL_ENTROPY,
    AdditiveScalar,
    CostFunction,
    MatrixGraph,
    Path,
    TotalEntropy,
    check_edge_matrix,
    compose,
    compose_path,
    total_entropy,
)
from .errors import MatPathError
from .solver import (
    SolverConfig,
    all_pairs,
    brute_force_oracle,
    fixed_k_path,
    shortest_path,
    shortest_paths_from,
)

__version__ = "0.1.0"
