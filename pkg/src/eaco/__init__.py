"""Enhanced ant colony optimisation with genetic refinement."""

from .engine import ConvergenceRecord, EacoParams, run
from .model import (
    ConstructionGraph,
    InvalidInputError,
    Node,
    PheromoneMatrix,
    ProblemInstance,
    Solution,
    TspProblem,
)

__all__ = [
    "ConstructionGraph",
    "ConvergenceRecord",
    "EacoParams",
    "InvalidInputError",
    "Node",
    "PheromoneMatrix",
    "ProblemInstance",
    "Solution",
    "TspProblem",
    "run",
]
