"""Branch-and-bound for k-means (MSSC) under must-link and cannot-link constraints."""
from .engine import SolveResult, Status, solve, solve_dataset
from .errors import PcbbError, RootInfeasible, ValidationError
from .heuristics import cop_kmeans, multi_restart
from .model import CentroidRegion, CollapsedInstance, ConstraintSet, Dataset, Solution, SolverConfig
from .oracle import brute_force
from .preprocess import collapse

__all__ = [
    "CentroidRegion",
    "CollapsedInstance",
    "ConstraintSet",
    "Dataset",
    "PcbbError",
    "RootInfeasible",
    "Solution",
    "SolveResult",
    "SolverConfig",
    "Status",
    "ValidationError",
    "brute_force",
    "collapse",
    "cop_kmeans",
    "multi_restart",
    "solve",
    "solve_dataset",
]
