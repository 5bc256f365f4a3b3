"""Exact low-rank Boolean matrix approximation."""

from .boolmat import (
    BooleanMatrix,
    Factorization,
    approximation_error,
    boolean_product,
    boolean_rank_upper_bound,
)
from .reduce import WeightedInstance, expand, reduce
from .solve import SolveConfig, SolveResult, branch_and_bound, brute_force, factorize, greedy_warm_start

__all__ = [
    "BooleanMatrix",
    "Factorization",
    "SolveConfig",
    "SolveResult",
    "WeightedInstance",
    "approximation_error",
    "boolean_product",
    "boolean_rank_upper_bound",
    "branch_and_bound",
    "brute_force",
    "expand",
    "factorize",
    "greedy_warm_start",
    "reduce",
]
