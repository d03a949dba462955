"""Graph model shared by every problem family: nodes, distance/heuristic
matrices, pheromone storage and the problem-instance protocol the engine drives.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ETA_CAP = 1.0e6


class InvalidInputError(ValueError):
    """Raised when an operation receives arguments outside its contract."""


@dataclass(frozen=True)
class Node:
    id: int
    coords: tuple[float, ...]

    def __post_init__(self):
        if not all(np.isfinite(self.coords)):
            raise InvalidInputError(f"node {self.id} has non-finite coordinates")


@dataclass(eq=False)
class Solution:
    """A node sequence with its cached cost.

    ``cost`` is the strictly positive value the pheromone rules divide by;
    ``objective`` is the value reported to users (``cost`` minus the
    instance shift).  ``x`` carries the decoded real vector for continuous
    problems, which may sit between grid levels after genetic refinement.
    """

    nodes: tuple[int, ...]
    cost: float
    objective: float
    closed: bool = False
    x: np.ndarray | None = None

    def edges(self) -> list[tuple[int, int]]:
        seq = self.nodes
        pairs = list(zip(seq[:-1], seq[1:]))
        if self.closed and len(seq) > 1:
            pairs.append((seq[-1], seq[0]))
        return pairs

    def __len__(self) -> int:
        return len(self.nodes)


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("coordinates must be finite")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def build_matrices(nodes: Sequence[Node]) -> tuple[np.ndarray, np.ndarray]:
    """Dense distance matrix and its reciprocal heuristic matrix.

    Coincident nodes get ``ETA_CAP`` instead of a division by zero.  The
    diagonal of ``eta`` is zero: a node is never its own successor.
    """
    if len(nodes) < 2:
        raise InvalidInputError("need at least two nodes")
    dims = {len(n.coords) for n in nodes}
    if len(dims) != 1:
        raise InvalidInputError("all nodes must share one coordinate dimension")
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("node ids must be unique")
    pts = np.array([n.coords for n in nodes], dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    # exact symmetry; the subtraction above is symmetric up to sign only
    dist = np.triu(dist, 1)
    dist = dist + dist.T
    eta = np.zeros_like(dist)
    off = ~np.eye(len(nodes), dtype=bool)
    with np.errstate(divide="ignore"):
        inv = 1.0 / dist
    inv = np.where(dist * ETA_CAP > 1.0, inv, ETA_CAP)
    eta[off] = inv[off]
    dist.setflags(write=False)
    eta.setflags(write=False)
    return dist, eta


@dataclass
class ConstructionGraph:
    nodes: list[Node]
    dist: np.ndarray
    eta: np.ndarray
    adjacency: list[np.ndarray] | None = None  # None means fully connected

    @classmethod
    def from_nodes(cls, nodes: Sequence[Node], adjacency=None) -> "ConstructionGraph":
        dist, eta = build_matrices(nodes)
        return cls(list(nodes), dist, eta, adjacency)

    @classmethod
    def from_coords(cls, coords: Iterable[Sequence[float]], adjacency=None) -> "ConstructionGraph":
        nodes = [Node(i, tuple(float(v) for v in c)) for i, c in enumerate(coords)]
        return cls.from_nodes(nodes, adjacency)

    def __post_init__(self):
        if not np.array_equal(self.dist, self.dist.T):
            raise InvalidInputError("asymmetric distance matrix")

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def coords(self) -> np.ndarray:
        return np.array([nd.coords for nd in self.nodes], dtype=float)


@dataclass
class PheromoneMatrix:
    tau: np.ndarray
    tau0: float
    tau_min: float
    tau_max: float

    @classmethod
    def uniform(cls, n: int, tau0: float, tau_min: float, tau_max: float) -> "PheromoneMatrix":
        if not tau_min < tau_max:
            raise InvalidInputError("tau_min must be below tau_max")
        tau0 = min(max(tau0, tau_min), tau_max)
        return cls(np.full((n, n), tau0), tau0, tau_min, tau_max)

    def within_bounds(self) -> bool:
        return bool(np.all((self.tau >= self.tau_min) & (self.tau <= self.tau_max)))


def init_pheromone(n: int, l_nn: float) -> float:
    """Initial trail level 1/(n * L_nn)."""
    if n < 2:
        raise InvalidInputError("need at least two nodes")
    if not l_nn > 0:
        raise InvalidInputError("nearest-neighbour length must be positive")
    return 1.0 / (n * l_nn)


def tour_length(dist: np.ndarray, nodes: Sequence[int], closed: bool = True) -> float:
    idx = np.asarray(nodes, dtype=int)
    total = float(np.sum(dist[idx[:-1], idx[1:]]))
    if closed and len(idx) > 1:
        total += float(dist[idx[-1], idx[0]])
    return total


def nearest_neighbor_tour(graph: ConstructionGraph, start: int = 0, closed: bool = True) -> Solution:
    n = graph.n
    visited = np.zeros(n, dtype=bool)
    tour = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        row = np.where(visited, np.inf, graph.dist[cur])
        cur = int(np.argmin(row))  # first minimum = lowest id
        tour.append(cur)
        visited[cur] = True
    length = tour_length(graph.dist, tour, closed)
    return Solution(tuple(tour), length, length, closed=closed)


class ProblemInstance:
    """Base protocol for anything the ant engine can walk on.

    Subclasses choose the successor rule (the feasibility set), completion
    test and objective.  ``shift`` is added to the reported objective to
    keep engine costs strictly positive.
    """

    kind = "tour"
    symmetric = True
    closed = False
    shift = 0.0
    optimum_known: float | None = None

    def __init__(self, graph: ConstructionGraph):
        self.graph = graph

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def eta(self) -> np.ndarray:
        return self.graph.eta

    def start_node(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def candidates(self, path: list[int], visited: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_complete(self, path: list[int]) -> bool:
        raise NotImplementedError

    def objective(self, nodes: Sequence[int]) -> float:
        raise NotImplementedError

    def evaluate(self, nodes: Sequence[int]) -> Solution:
        obj = self.objective(nodes)
        return Solution(tuple(int(v) for v in nodes), obj + self.shift, obj, closed=self.closed)

    def reference_length(self) -> float:
        """Cost estimate used to size the pheromone bounds."""
        raise NotImplementedError

    @property
    def branching(self) -> int:
        """Typical number of successors per step; sizes the pheromone floor."""
        return self.n

    def greedy_start(self) -> int:
        return 0

    def refine(self, best: Solution, stagnant: int) -> Solution | None:
        """Hook for problems whose encoding can change mid-run."""
        return None


class TspProblem(ProblemInstance):
    """Closed tour visiting every node once; ants start at random nodes."""

    kind = "tour"
    closed = True

    def __init__(self, graph: ConstructionGraph, optimum_known: float | None = None):
        if graph.adjacency is not None:
            raise InvalidInputError("TSP instances must be fully connected")
        super().__init__(graph)
        self.optimum_known = optimum_known

    def start_node(self, rng):
        return int(rng.integers(self.n))

    def candidates(self, path, visited):
        return np.flatnonzero(~visited)

    def is_complete(self, path):
        return len(path) == self.n

    def objective(self, nodes):
        return tour_length(self.graph.dist, nodes, closed=True)

    def reference_length(self):
        return nearest_neighbor_tour(self.graph, 0).cost


def read_graph_file(path: str | Path) -> ConstructionGraph:
    """Parse the plain-text node file: header ``n d`` then ``id x y [z]``."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InvalidInputError(f"{path}: empty graph file")
    try:
        n, d = int(lines[0][0]), int(lines[0][1])
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"{path}:1: header must be 'n d'") from exc
    if d not in (2, 3):
        raise InvalidInputError(f"{path}:1: dimension must be 2 or 3")
    body = lines[1:]
    if len(body) != n:
        raise InvalidInputError(f"{path}: expected {n} node lines, got {len(body)}")
    nodes = []
    for lineno, parts in enumerate(body, start=2):
        if len(parts) != d + 1:
            raise InvalidInputError(f"{path}:{lineno}: expected id and {d} coordinates")
        try:
            nodes.append(Node(int(parts[0]), tuple(float(v) for v in parts[1:])))
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    nodes.sort(key=lambda nd: nd.id)
    if [nd.id for nd in nodes] != list(range(n)):
        raise InvalidInputError(f"{path}: node ids must be 0..{n - 1}")
    return ConstructionGraph.from_nodes(nodes)


def write_graph_file(path: str | Path, graph: ConstructionGraph) -> None:
    coords = graph.coords
    out = [f"{graph.n} {coords.shape[1]}"]
    for nd in graph.nodes:
        out.append(" ".join([str(nd.id)] + [repr(float(c)) for c in nd.coords]))
    Path(path).write_text("\n".join(out) + "\n")
