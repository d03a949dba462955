"""Constrained continuous test problems (G1-G4) and penalty handling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..model import InvalidInputError

EQ_TOL = 1e-4
PEN_UNIT = 1.0e3


def _empty(x):
    return np.zeros(0)


@dataclass
class BoxProblem:
    """Bound-constrained minimisation target consumed by the real-coded baselines."""

    name: str
    lower: np.ndarray
    upper: np.ndarray
    func: Callable[[np.ndarray], float]
    optimum: float | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or not np.all(np.isfinite(self.lower)) \
                or not np.all(np.isfinite(self.upper)) or np.any(self.upper <= self.lower):
            raise InvalidInputError(f"{self.name}: invalid bounds")

    @property
    def dimension(self) -> int:
        return self.lower.size

    def value(self, x) -> float:
        return float(self.func(np.asarray(x, dtype=float)))


@dataclass
class ConstrainedProblem:
    name: str
    lower: np.ndarray
    upper: np.ndarray
    f: Callable[[np.ndarray], float]
    g: Callable[[np.ndarray], np.ndarray] = _empty
    h: Callable[[np.ndarray], np.ndarray] = _empty
    reported_optimum: float | None = None
    literature_optimum: float | None = None
    x_star: np.ndarray | None = None
    shift: float = 0.0
    penalty_weight: float = 1.0
    stub: bool = False

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise InvalidInputError(f"{self.name}: bounds must be finite")

    @property
    def dimension(self) -> int:
        return self.lower.size

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.lower.shape:
            raise InvalidInputError(f"{self.name}: expected {self.dimension} variables, got {x.shape}")
        if np.any(x < self.lower) or np.any(x > self.upper):
            raise InvalidInputError(f"{self.name}: point outside bounds")
        return x

    def violation(self, x) -> tuple[np.ndarray, np.ndarray]:
        gv = np.maximum(0.0, np.asarray(self.g(x), dtype=float))
        hv = np.maximum(0.0, np.abs(np.asarray(self.h(x), dtype=float)) - EQ_TOL)
        return gv, hv

    def is_feasible(self, x) -> bool:
        gv, hv = self.violation(self.check(x))
        return not (np.any(gv > 0) or np.any(hv > 0))

    def as_box(self, pen: float = 0.3) -> BoxProblem:
        return BoxProblem(self.name, self.lower, self.upper,
                          lambda x: penalized_objective(x, self, pen), self.reported_optimum)


def pen_scale(pen: float, problem: ConstrainedProblem) -> float:
    """Map the tabulated penalty factor onto a quadratic penalty weight."""
    return pen * PEN_UNIT * problem.penalty_weight


def penalty(x, problem: ConstrainedProblem, scale: float) -> float:
    gv, hv = problem.violation(x)
    return float(scale * (np.sum(gv ** 2) + np.sum(hv ** 2)))


def penalized_objective(x, problem: ConstrainedProblem, pen: float = 0.3) -> float:
    x = problem.check(x)
    return _penalized(x, problem, pen)


def _penalized(x, problem: ConstrainedProblem, pen: float) -> float:
    f = float(problem.f(x))
    p = penalty(x, problem, pen_scale(pen, problem))
    return f + p if p > 0 else f


# --- G1: 13 variables, quadratic objective, nine linear constraints -----------


def _g1_f(x):
    return 5.0 * np.sum(x[:4]) - 5.0 * np.sum(x[:4] ** 2) - np.sum(x[4:13])


def _g1_g(x):
    return np.array([
        2 * x[0] + 2 * x[1] + x[9] + x[10] - 10,
        2 * x[0] + 2 * x[2] + x[9] + x[11] - 10,
        2 * x[1] + 2 * x[2] + x[10] + x[11] - 10,
        -8 * x[0] + x[9],
        -8 * x[1] + x[10],
        -8 * x[2] + x[11],
        -2 * x[3] - x[4] + x[9],
        -2 * x[5] - x[6] + x[10],
        -2 * x[7] - x[8] + x[11],
    ])


# --- G2: 8 variables, linear objective, optimum near 7049 ---------------------


def _g2_f(x):
    return x[0] + x[1] + x[2]


def _g2_g(x):
    return np.array([
        -1 + 0.0025 * (x[3] + x[5]),
        -1 + 0.0025 * (x[4] + x[6] - x[3]),
        -1 + 0.01 * (x[7] - x[4]),
        -x[0] * x[5] + 833.33252 * x[3] + 100 * x[0] - 83333.333,
        -x[1] * x[6] + 1250 * x[4] + x[1] * x[3] - 1250 * x[3],
        -x[2] * x[7] + 1250000 + x[2] * x[4] - 2500 * x[4],
    ])


# --- G3: 7 variables, polynomial objective, optimum near 680.63 ---------------


def _g3_f(x):
    return ((x[0] - 10) ** 2 + 5 * (x[1] - 12) ** 2 + x[2] ** 4 + 3 * (x[3] - 11) ** 2
            + 10 * x[4] ** 6 + 7 * x[5] ** 2 + x[6] ** 4 - 4 * x[5] * x[6] - 10 * x[5] - 8 * x[6])


def _g3_g(x):
    return np.array([
        -127 + 2 * x[0] ** 2 + 3 * x[1] ** 4 + x[2] + 4 * x[3] ** 2 + 5 * x[4],
        -282 + 7 * x[0] + 3 * x[1] + 10 * x[2] ** 2 + x[3] - x[4],
        -196 + 23 * x[0] + x[1] ** 2 + 6 * x[5] ** 2 - 8 * x[6],
        4 * x[0] ** 2 + x[1] ** 2 - 3 * x[0] * x[1] + 2 * x[2] ** 2 + 5 * x[5] - 11 * x[6],
    ])


# --- G4: tentative; exp(x1 x2 x3 x4 x5) with three equalities ------------------


def _g4_f(x):
    return float(np.exp(np.prod(x[:5])))


def _g4_h(x):
    return np.array([
        np.sum(x ** 2) - 10,
        x[1] * x[2] - 5 * x[3] * x[4],
        x[0] ** 3 + x[1] ** 3 + 1,
    ])


def _build_registry() -> dict[int, ConstrainedProblem]:
    g1_up = np.ones(13)
    g1_up[9:12] = 100.0
    return {
        1: ConstrainedProblem(
            "g1", np.zeros(13), g1_up, _g1_f, _g1_g,
            reported_optimum=-15.012, literature_optimum=-15.0,
            x_star=np.array([1, 1, 1, 1, 1, 1, 1, 1, 1, 3, 3, 3, 1], dtype=float),
            shift=20.0),
        2: ConstrainedProblem(
            "g2", [100, 1000, 1000, 10, 10, 10, 10, 10],
            [10000, 10000, 10000, 1000, 1000, 1000, 1000, 1000], _g2_f, _g2_g,
            reported_optimum=7050.331, literature_optimum=7049.248,
            x_star=np.array([579.306685, 1359.970678, 5109.970657, 182.017700,
                             295.601174, 217.982300, 286.416526, 395.601174]),
            penalty_weight=1e-3),
        3: ConstrainedProblem(
            "g3", np.full(7, -10.0), np.full(7, 10.0), _g3_f, _g3_g,
            reported_optimum=680.538, literature_optimum=680.630,
            x_star=np.array([2.330499, 1.951372, -0.4775414, 4.365726,
                             -0.6244870, 1.038131, 1.594227])),
        4: ConstrainedProblem(
            "g4", [-2.3, -2.3, -3.2, -3.2, -3.2], [2.3, 2.3, 3.2, 3.2, 3.2], _g4_f, h=_g4_h,
            reported_optimum=0.0562, literature_optimum=0.0539498,
            x_star=np.array([-1.717142240, 1.595721240, 1.827250241, -0.763659882, -0.763659867]),
            stub=True),
    }


REGISTRY = _build_registry()


def get_problem(problem_id) -> ConstrainedProblem:
    key = problem_id
    if isinstance(key, str):
        key = key.lower().lstrip("g")
    try:
        return REGISTRY[int(key)]
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"unknown benchmark {problem_id!r}") from exc


def g_function(problem_id, x) -> tuple[float, np.ndarray]:
    """Raw objective and stacked constraint values (inequalities then equalities)."""
    prob = get_problem(problem_id)
    x = np.asarray(x, dtype=float)
    if x.shape != prob.lower.shape:
        raise InvalidInputError(f"{prob.name}: expected {prob.dimension} variables, got {x.shape}")
    cons = np.concatenate([np.atleast_1d(prob.g(x)), np.atleast_1d(prob.h(x))])
    return float(prob.f(x)), cons


def sphere(dim: int = 2, bound: float = 5.0) -> BoxProblem:
    return BoxProblem(f"sphere{dim}", np.full(dim, -bound), np.full(dim, bound),
                      lambda x: float(np.sum(x * x)), 0.0)
