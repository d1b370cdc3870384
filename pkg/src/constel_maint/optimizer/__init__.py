"""Solvers for the operator (P1), provider (P2) and bi-objective (P3) problems."""
from .nsga2 import GeneSpace, run_nsga2
from .pareto import (
    DEFAULT_REFERENCE,
    ObjectivePoint,
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    hypervolume,
    non_dominated_brute_force,
)
from .problems import (
    FrontMember,
    P1Result,
    P2Result,
    ParetoFront,
    local_search,
    polish_front,
    refine_p1,
    solve_p1,
    solve_p2,
    solve_p3,
)

__all__ = [
    "DEFAULT_REFERENCE", "FrontMember", "GeneSpace", "ObjectivePoint", "P1Result", "P2Result", "ParetoFront",
    "crowding_distance", "dominates", "fast_non_dominated_sort", "hypervolume", "non_dominated_brute_force",
    "local_search", "polish_front", "refine_p1", "run_nsga2", "solve_p1", "solve_p2", "solve_p3",
]
