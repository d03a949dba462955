"""Layered-graph encoding of bounded continuous vectors.

A path source -> layer 0 -> ... -> layer d-1 picks one quantised level per
dimension.  Each layer holds ``levels`` points spread over a window that
shrinks around the incumbent, plus ``anchors`` fixed points spread over the
original bounds so the whole box stays reachable after shrinking.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ..model import ConstructionGraph, InvalidInputError, Node, ProblemInstance, Solution


@dataclass(frozen=True)
class DiscretizationScheme:
    levels: int
    lower: np.ndarray  # current range
    upper: np.ndarray
    orig_lower: np.ndarray
    orig_upper: np.ndarray
    gamma: float = 0.7
    anchors: int = 0

    @classmethod
    def for_bounds(cls, lower, upper, levels: int = 21, gamma: float = 0.7,
                   anchors: int = 0) -> "DiscretizationScheme":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or np.any(hi < lo) or not np.all(np.isfinite(lo) & np.isfinite(hi)):
            raise InvalidInputError("bounds must be finite with lower <= upper")
        return cls(levels, lo.copy(), hi.copy(), lo.copy(), hi.copy(), gamma, anchors)

    def __post_init__(self):
        if self.levels < 2:
            raise InvalidInputError("need at least two levels per dimension")
        if self.anchors == 1 or self.anchors < 0:
            raise InvalidInputError("anchors must be 0 or at least 2")
        if not 0 < self.gamma <= 1:
            raise InvalidInputError("shrink factor must lie in (0, 1]")
        if np.any(self.lower < self.orig_lower) or np.any(self.upper > self.orig_upper) \
                or np.any(self.upper < self.lower):
            raise InvalidInputError("ranges must stay within the original bounds")

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> int:
        """Nodes per layer."""
        return self.levels + self.anchors

    def grid(self) -> np.ndarray:
        """(d, width) matrix of level values: window levels, then anchors."""
        cached = self.__dict__.get("_grid")
        if cached is None:
            cached = self._build_grid()
            cached.setflags(write=False)
            object.__setattr__(self, "_grid", cached)
        return cached

    def _build_grid(self) -> np.ndarray:
        t = np.linspace(0.0, 1.0, self.levels)
        fine = self.lower[:, None] + (self.upper - self.lower)[:, None] * t[None, :]
        if not self.anchors:
            return fine
        a = np.linspace(0.0, 1.0, self.anchors)
        coarse = self.orig_lower[:, None] + (self.orig_upper - self.orig_lower)[:, None] * a[None, :]
        return np.hstack([fine, coarse])

    def decode_levels(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=int)
        return self.grid()[np.arange(self.dimension), idx]

    def encode(self, x) -> np.ndarray:
        """Nearest level index per dimension (lowest index on ties)."""
        x = np.asarray(x, dtype=float)
        return np.argmin(np.abs(self.grid() - x[:, None]), axis=1)


def shrink_ranges(scheme: DiscretizationScheme, best_x, gamma: float | None = None) -> DiscretizationScheme:
    """Recentre every range on ``best_x`` with its width scaled by gamma.

    A window that would cross an original bound is slid back inside it, so
    the width shrinks by exactly gamma per call.
    """
    gamma = scheme.gamma if gamma is None else gamma
    best_x = np.clip(np.asarray(best_x, dtype=float), scheme.orig_lower, scheme.orig_upper)
    width = np.minimum(gamma * (scheme.upper - scheme.lower), scheme.orig_upper - scheme.orig_lower)
    lo = np.minimum(best_x - 0.5 * width, scheme.orig_upper - width)
    lo = np.maximum(lo, scheme.orig_lower)  # rounding can push orig_upper - width below the floor
    hi = np.minimum(lo + width, scheme.orig_upper)
    return replace(scheme, lower=lo, upper=hi)


class LayeredProblem(ProblemInstance):
    """Node 0 is the source; node ``1 + i*L + j`` is level j of dimension i."""

    kind = "layered"
    symmetric = False
    closed = False

    def __init__(self, func: Callable[[np.ndarray], float], scheme: DiscretizationScheme,
                 shift: float = 0.0, name: str = "layered", min_width: float = 1e-9):
        self.func = func
        self.scheme = scheme
        self.shift = shift
        self.name = name
        self.min_width = min_width
        d, L = scheme.dimension, scheme.width
        nodes = [Node(0, (0.0, 0.0))]
        nodes += [Node(1 + i * L + j, (float(i + 1), float(j))) for i in range(d) for j in range(L)]
        super().__init__(ConstructionGraph.from_nodes(nodes))
        self._eta = np.ones((self.n, self.n))
        np.fill_diagonal(self._eta, 0.0)
        self._layers = [np.arange(1 + i * L, 1 + (i + 1) * L) for i in range(d)]

    @property
    def eta(self):
        return self._eta

    @property
    def dimension(self) -> int:
        return self.scheme.dimension

    @property
    def branching(self) -> int:
        return self.scheme.width

    def start_node(self, rng):
        return 0

    def candidates(self, path, visited):
        layer = len(path) - 1
        if layer >= self.dimension:
            return np.zeros(0, dtype=int)
        return self._layers[layer]

    def is_complete(self, path):
        return len(path) == self.dimension + 1

    def construct_batch(self, choice: np.ndarray, q0: float, m: int, rng: np.random.Generator) -> list[Solution]:
        """All ``m`` ants layer by layer at once; same rule as the generic walk."""
        draws = rng.random((self.dimension, m, 2))
        cur = np.zeros(m, dtype=int)
        paths = np.zeros((m, self.dimension + 1), dtype=int)
        for i, layer in enumerate(self._layers):
            w = choice[cur[:, None], layer[None, :]]
            greedy = np.argmax(w, axis=1)
            cum = np.cumsum(w, axis=1)
            total = cum[:, -1]
            ok = np.isfinite(total) & (total > 0)
            target = draws[i, :, 1] * np.where(ok, total, 1.0)
            sampled = np.minimum((cum <= target[:, None]).sum(axis=1), len(layer) - 1)
            # never land on a zero-weight level
            zero = w[np.arange(m), sampled] == 0.0
            if np.any(zero & ok):
                last_nz = len(layer) - 1 - np.argmax((w > 0)[:, ::-1], axis=1)
                sampled = np.where(zero & ok, last_nz, sampled)
            uniform = np.minimum((draws[i, :, 1] * len(layer)).astype(int), len(layer) - 1)
            sampled = np.where(ok, sampled, uniform)
            pick = np.where(draws[i, :, 0] < q0, greedy, sampled)
            cur = layer[pick]
            paths[:, i + 1] = cur
        return [self.evaluate(tuple(int(v) for v in row)) for row in paths]

    def levels_of(self, nodes) -> np.ndarray:
        L = self.scheme.width
        return np.array([(v - 1) - i * L for i, v in enumerate(nodes[1:])], dtype=int)

    def nodes_of(self, idx) -> tuple[int, ...]:
        L = self.scheme.width
        return (0,) + tuple(int(1 + i * L + j) for i, j in enumerate(idx))

    def decode(self, nodes) -> np.ndarray:
        return self.scheme.decode_levels(self.levels_of(nodes))

    def encode(self, x) -> tuple[int, ...]:
        return self.nodes_of(self.scheme.encode(x))

    def decode_solution(self, sol: Solution) -> np.ndarray:
        return sol.x if sol.x is not None else self.decode(sol.nodes)

    def current_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.scheme.lower, self.scheme.upper

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.scheme.orig_lower, self.scheme.orig_upper

    def objective(self, nodes):
        return float(self.func(self.decode(nodes)))

    def evaluate(self, nodes):
        x = self.decode(nodes)
        obj = float(self.func(x))
        return Solution(tuple(int(v) for v in nodes), obj + self.shift, obj, x=x)

    def evaluate_x(self, x) -> Solution:
        x = np.asarray(x, dtype=float)
        obj = float(self.func(x))
        return Solution(self.encode(x), obj + self.shift, obj, x=x)

    def reference_length(self):
        L = self.scheme.levels
        probes = [np.zeros(self.dimension, int), np.full(self.dimension, L // 2),
                  np.full(self.dimension, L - 1)]  # window levels only
        return min(self.evaluate(self.nodes_of(p)).cost for p in probes)

    def refine(self, best: Solution, stagnant: int) -> Solution | None:
        width = self.scheme.upper - self.scheme.lower
        span = self.scheme.orig_upper - self.scheme.orig_lower
        if np.all(width <= self.min_width * span):
            return None
        x = self.decode_solution(best)
        self.scheme = shrink_ranges(self.scheme, x)
        return Solution(self.encode(x), best.cost, best.objective, x=np.asarray(x, dtype=float))


def discretize(problem, scheme: DiscretizationScheme | None = None, pen: float = 0.3,
               levels: int = 7, gamma: float = 0.7, anchors: int = 7) -> LayeredProblem:
    """Layered problem over a constrained benchmark; the objective is the
    penalised value and the benchmark's positivity shift is applied."""
    from .gfuncs import _penalized

    if scheme is None:
        scheme = DiscretizationScheme.for_bounds(problem.lower, problem.upper, levels, gamma, anchors)

    def func(x):
        return _penalized(np.clip(x, problem.lower, problem.upper), problem, pen)

    return LayeredProblem(func, scheme, shift=problem.shift, name=problem.name)
