"""Polygon-obstacle environments, waypoint grids and the open-path problem."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon

from ..model import ConstructionGraph, InvalidInputError, ProblemInstance, Solution, tour_length


class EnvironmentInfeasibleError(RuntimeError):
    """Start and goal are not connected after obstacle pruning."""


def _polygon(vertices) -> Polygon:
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise InvalidInputError("polygons need at least three vertices")
    poly = Polygon(pts[:, :2])
    if not poly.is_valid or poly.area <= 0:
        raise InvalidInputError("polygon is not simple")
    return shapely.geometry.polygon.orient(poly, 1.0)  # counterclockwise


@dataclass
class Environment:
    box: tuple[float, float, float, float]
    obstacles: list[np.ndarray]
    start: tuple[float, float]
    goal: tuple[float, float]
    polygons: list[Polygon] = field(init=False, repr=False)

    def __post_init__(self):
        self.polygons = [_polygon(v) for v in self.obstacles]
        self.obstacles = [np.asarray(p.exterior.coords[:-1]) for p in self.polygons]
        for name, pt in (("start", self.start), ("goal", self.goal)):
            if any(poly.intersects(Point(pt[:2])) for poly in self.polygons):
                raise InvalidInputError(f"{name} lies inside an obstacle")


def segment_collides(a, b, obstacles) -> bool:
    """True when segment ab touches any obstacle, boundary included."""
    seg = LineString([tuple(a[:2]), tuple(b[:2])]) if tuple(a[:2]) != tuple(b[:2]) else Point(a[:2])
    for obs in obstacles:
        poly = obs if isinstance(obs, Polygon) else _polygon(obs)
        if seg.intersects(poly):
            return True
    return False


@dataclass
class WaypointGraph:
    coords: np.ndarray
    neighbors: list[np.ndarray]
    start: int
    goal: int
    resolution: float

    @property
    def n(self) -> int:
        return len(self.coords)

    def edges(self):
        for i, nb in enumerate(self.neighbors):
            for j in nb:
                if i < j:
                    yield i, int(j)


class PathProblem(ProblemInstance):
    """Open path from a fixed start to a goal over an adjacency-restricted graph.

    The heuristic prefers short edges that also head toward the goal:
    eta_ij = 1 / (d_ij + |j - goal|).
    """

    kind = "path"
    closed = False
    symmetric = True

    def __init__(self, graph: ConstructionGraph, start: int, goal: int, optimum_known=None):
        if graph.adjacency is None:
            raise InvalidInputError("path problems need an adjacency structure")
        super().__init__(graph)
        self.start, self.goal = start, goal
        self.optimum_known = optimum_known
        self.neighbors = [np.sort(np.asarray(nb, dtype=int)) for nb in graph.adjacency]
        to_goal = graph.dist[:, goal]
        with np.errstate(divide="ignore"):
            eta = 1.0 / (graph.dist + to_goal[None, :])
        eta[~np.isfinite(eta)] = 0.0
        np.fill_diagonal(eta, 0.0)
        eta.setflags(write=False)
        self._eta = eta

    @property
    def eta(self):
        return self._eta

    @property
    def branching(self) -> int:
        return max(len(nb) for nb in self.neighbors)

    def start_node(self, rng):
        return self.start

    def greedy_start(self):
        return self.start

    def candidates(self, path, visited):
        nb = self.neighbors[path[-1]]
        return nb[~visited[nb]]

    def is_complete(self, path):
        return path[-1] == self.goal

    def objective(self, nodes):
        return tour_length(self.graph.dist, nodes, closed=False)

    def reference_length(self):
        path = [self.start]
        visited = np.zeros(self.n, dtype=bool)
        visited[self.start] = True
        while path[-1] != self.goal:
            cand = self.candidates(path, visited)
            if cand.size == 0:
                d = self.graph.dist[self.start, self.goal]
                return 2.0 * d if d > 0 else 1.0
            nxt = int(cand[np.argmax(self._eta[path[-1], cand])])
            path.append(nxt)
            visited[nxt] = True
        return max(self.objective(path), 1e-9)

    def is_collision_free(self, sol: Solution, env: Environment) -> bool:
        pts = self.graph.coords
        return not any(segment_collides(pts[i], pts[j], env.polygons) for i, j in sol.edges())


_MOVES = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def build_waypoint_graph(env: Environment, resolution: float) -> tuple[WaypointGraph, PathProblem]:
    if not resolution > 0:
        raise InvalidInputError("resolution must be positive")
    xmin, ymin, xmax, ymax = env.box
    nx = int(np.floor((xmax - xmin) / resolution + 1e-9)) + 1
    ny = int(np.floor((ymax - ymin) / resolution + 1e-9)) + 1
    gx, gy = np.meshgrid(xmin + resolution * np.arange(nx), ymin + resolution * np.arange(ny), indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    blocked = np.zeros(len(pts), dtype=bool)
    for poly in env.polygons:
        blocked |= shapely.intersects(shapely.points(pts), poly)

    index = -np.ones((nx, ny), dtype=int)
    free_cells = [(i, j) for i in range(nx) for j in range(ny) if not blocked[i * ny + j]]
    for k, (i, j) in enumerate(free_cells):
        index[i, j] = k
    coords = np.array([pts[i * ny + j] for i, j in free_cells])
    if len(coords) < 2:
        raise EnvironmentInfeasibleError("no free waypoints")

    cand_a, cand_b = [], []
    for k, (i, j) in enumerate(free_cells):
        for di, dj in _MOVES:
            ii, jj = i + di, j + dj
            if 0 <= ii < nx and 0 <= jj < ny and index[ii, jj] > k:
                cand_a.append(k)
                cand_b.append(index[ii, jj])
    cand_a = np.array(cand_a, dtype=int)
    cand_b = np.array(cand_b, dtype=int)
    keep = np.ones(len(cand_a), dtype=bool)
    if env.polygons and len(cand_a):
        lines = shapely.linestrings(np.stack([coords[cand_a], coords[cand_b]], axis=1))
        for poly in env.polygons:
            keep &= ~shapely.intersects(lines, poly)
    neighbors: list[list[int]] = [[] for _ in range(len(coords))]
    for a, b in zip(cand_a[keep], cand_b[keep]):
        neighbors[a].append(int(b))
        neighbors[b].append(int(a))

    def snap(p):
        return int(np.argmin(np.sum((coords - np.asarray(p[:2])) ** 2, axis=1)))

    start, goal = snap(env.start), snap(env.goal)
    if start == goal:
        raise EnvironmentInfeasibleError("start and goal snap to the same waypoint")
    if not _connected(neighbors, start, goal):
        raise EnvironmentInfeasibleError("goal unreachable from start")
    adjacency = [np.array(sorted(nb), dtype=int) for nb in neighbors]
    wg = WaypointGraph(coords, adjacency, start, goal, resolution)
    graph = ConstructionGraph.from_coords(coords, adjacency=adjacency)
    return wg, PathProblem(graph, start, goal)


def _connected(neighbors, a, b) -> bool:
    seen = {a}
    stack = [a]
    while stack:
        v = stack.pop()
        if v == b:
            return True
        for w in neighbors[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


# ---------------------------------------------------------------------------
# environment files and random instances
# ---------------------------------------------------------------------------


def read_environment(path: str | Path) -> Environment:
    """Parse ``box``/``start``/``goal``/``poly`` lines.  A third coordinate on
    start/goal is accepted and ignored."""
    box = start = goal = None
    polys = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        key, vals = parts[0], parts[1:]
        try:
            nums = [float(v) for v in vals]
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
        if key == "box" and len(nums) == 4:
            box = tuple(nums)
        elif key in ("start", "goal") and len(nums) in (2, 3):
            if key == "start":
                start = tuple(nums[:2])
            else:
                goal = tuple(nums[:2])
        elif key == "poly" and len(nums) >= 6 and len(nums) % 2 == 0:
            polys.append(np.array(nums).reshape(-1, 2))
        else:
            raise InvalidInputError(f"{path}:{lineno}: cannot parse {raw.strip()!r}")
    if box is None or start is None or goal is None:
        raise InvalidInputError(f"{path}: box, start and goal lines are required")
    return Environment(box, polys, start, goal)


def write_environment(path: str | Path, env: Environment) -> None:
    lines = ["box " + " ".join(repr(float(v)) for v in env.box),
             "start " + " ".join(repr(float(v)) for v in env.start),
             "goal " + " ".join(repr(float(v)) for v in env.goal)]
    for poly in env.obstacles:
        lines.append("poly " + " ".join(repr(float(v)) for v in np.asarray(poly).ravel()))
    Path(path).write_text("\n".join(lines) + "\n")


def random_environment(rng: np.random.Generator, size: float = 29.0, n_obstacles: int = 10,
                       radius: tuple[float, float] = (1.5, 4.0), max_tries: int = 200) -> Environment:
    """Random convex polygons in a square box, start and goal in opposite corners."""
    start, goal = (1.0, 1.0), (size - 1.0, size - 1.0)
    polys = []
    tries = 0
    while len(polys) < n_obstacles and tries < max_tries:
        tries += 1
        c = rng.uniform(2.0, size - 2.0, size=2)
        r = rng.uniform(*radius)
        k = int(rng.integers(3, 8))
        ang = np.sort(rng.uniform(0, 2 * np.pi, size=k))
        rad = r * rng.uniform(0.6, 1.0, size=k)
        pts = np.column_stack([c[0] + rad * np.cos(ang), c[1] + rad * np.sin(ang)])
        hull = shapely.convex_hull(shapely.multipoints(pts))
        if not isinstance(hull, Polygon) or hull.area < 0.5:
            continue
        if hull.buffer(1.0).intersects(Point(start)) or hull.buffer(1.0).intersects(Point(goal)):
            continue
        polys.append(np.asarray(hull.exterior.coords[:-1]))
    return Environment((0.0, 0.0, size, size), polys, start, goal)
