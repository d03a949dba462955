"""Exact reference solvers for small instances."""

from __future__ import annotations

import heapq
from itertools import permutations

import numpy as np

from ..model import ConstructionGraph, InvalidInputError, Solution, tour_length
from .planning import WaypointGraph

MAX_TSP_NODES = 10


def oracle_shortest_path(graph: WaypointGraph) -> Solution:
    """Dijkstra over the waypoint adjacency with Euclidean edge weights."""
    coords = graph.coords
    dist = np.full(graph.n, np.inf)
    prev = -np.ones(graph.n, dtype=int)
    dist[graph.start] = 0.0
    heap = [(0.0, graph.start)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        if v == graph.goal:
            break
        for w in graph.neighbors[v]:
            nd = d + float(np.hypot(*(coords[w] - coords[v])))
            if nd < dist[w]:
                dist[w] = nd
                prev[w] = v
                heapq.heappush(heap, (nd, int(w)))
    if not np.isfinite(dist[graph.goal]):
        raise InvalidInputError("goal not reachable from start")
    path = [graph.goal]
    while path[-1] != graph.start:
        path.append(int(prev[path[-1]]))
    path.reverse()
    length = float(dist[graph.goal])
    return Solution(tuple(path), length, length)


def oracle_tsp(nodes) -> Solution:
    """Exhaustive optimal closed tour with city 0 fixed first.

    Accepts a ConstructionGraph or an (n, d) coordinate array.
    """
    graph = nodes if isinstance(nodes, ConstructionGraph) else ConstructionGraph.from_coords(nodes)
    n = graph.n
    if n > MAX_TSP_NODES:
        raise InvalidInputError(f"exhaustive TSP refused above {MAX_TSP_NODES} nodes")
    dist = graph.dist
    if n <= 3:
        tour = tuple(range(n))
        length = tour_length(dist, tour)
        return Solution(tour, length, length, closed=True)
    rest = np.array([p for p in permutations(range(1, n)) if p[0] < p[-1]], dtype=int)
    full = np.column_stack([np.zeros(len(rest), dtype=int), rest, np.zeros(len(rest), dtype=int)])
    lengths = dist[full[:, :-1], full[:, 1:]].sum(axis=1)
    k = int(np.argmin(lengths))
    tour = tuple(int(v) for v in full[k, :-1])
    length = tour_length(dist, tour)
    return Solution(tour, length, length, closed=True)
