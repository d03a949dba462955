from .discretize import DiscretizationScheme, LayeredProblem, discretize, shrink_ranges
from .gfuncs import (
    REGISTRY,
    BoxProblem,
    ConstrainedProblem,
    g_function,
    get_problem,
    pen_scale,
    penalized_objective,
    penalty,
    sphere,
)
from .oracles import oracle_shortest_path, oracle_tsp
from .planning import (
    Environment,
    EnvironmentInfeasibleError,
    PathProblem,
    WaypointGraph,
    build_waypoint_graph,
    random_environment,
    read_environment,
    segment_collides,
    write_environment,
)

__all__ = [
    "REGISTRY",
    "BoxProblem",
    "ConstrainedProblem",
    "DiscretizationScheme",
    "Environment",
    "EnvironmentInfeasibleError",
    "LayeredProblem",
    "PathProblem",
    "WaypointGraph",
    "build_waypoint_graph",
    "discretize",
    "g_function",
    "get_problem",
    "oracle_shortest_path",
    "oracle_tsp",
    "pen_scale",
    "penalized_objective",
    "penalty",
    "random_environment",
    "read_environment",
    "segment_collides",
    "shrink_ranges",
    "sphere",
    "write_environment",
]
