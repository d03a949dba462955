"""Comparison optimisers: plain ACO, real-coded GA, simulated annealing, PSO.

All of them return ``(Solution, ConvergenceRecord)`` with the colony's row
schema; pheromone columns are NaN where they do not apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .benchmarks.gfuncs import BoxProblem, ConstrainedProblem
from .engine import ConvergenceRecord, EacoParams, run
from .model import InvalidInputError, ProblemInstance, Solution
from .operators import invert, laplace_crossover, power_mutation

NAN = float("nan")


@dataclass
class AcoParams:
    alpha_exp: float = 1.0
    beta_exp: float = 5.0
    rho: float = 0.2
    m_ants: int = 20
    q_reward: float = 100.0
    max_iterations: int = 1000
    target: float | None = None

    def __post_init__(self):
        if not 0 < self.rho < 1 or self.m_ants < 1 or self.max_iterations < 1:
            raise InvalidInputError("ACO needs rho in (0, 1), m_ants >= 1, max_iterations >= 1")


@dataclass
class GaParams:
    pop_size: int = 40
    p_crossover: float = 0.8
    p_mutation: float = 0.1  # per gene
    elite: int = 1
    tournament: int = 2
    laplace_b: float = 0.35
    power_index: float = 0.25
    max_iterations: int = 1000
    target: float | None = None

    def __post_init__(self):
        ok = (self.pop_size >= 2 and 0 <= self.p_crossover <= 1 and 0 <= self.p_mutation <= 1
              and 0 <= self.elite < self.pop_size and self.tournament >= 1 and self.max_iterations >= 1)
        if not ok:
            raise InvalidInputError("invalid GA parameters")


@dataclass
class SaParams:
    t0: float | None = None  # None: calibrate from sampled moves
    cooling: float = 0.98
    steps_per_temp: int = 20
    step_scale: float = 0.1  # Gaussian step as a fraction of each range
    min_step: float = 1e-4
    max_iterations: int = 1000
    target: float | None = None

    def __post_init__(self):
        if not 0 < self.cooling < 1:
            raise InvalidInputError("cooling factor must lie in (0, 1)")
        if self.steps_per_temp < 1 or self.max_iterations < 1:
            raise InvalidInputError("steps_per_temp and max_iterations must be >= 1")
        if self.t0 is not None and self.t0 < 0:
            raise InvalidInputError("initial temperature must be >= 0")


@dataclass
class PsoParams:
    swarm: int = 20
    inertia: float = 0.729
    c1: float = 1.49445
    c2: float = 1.49445
    vmax_frac: float = 0.2
    max_iterations: int = 1000
    target: float | None = None

    def __post_init__(self):
        if self.swarm < 1 or not 0 <= self.inertia < 1 or self.c1 < 0 or self.c2 < 0 or self.max_iterations < 1:
            raise InvalidInputError("invalid PSO parameters")


@dataclass
class BaselineParams:
    aco: AcoParams = field(default_factory=AcoParams)
    ga: GaParams = field(default_factory=GaParams)
    sa: SaParams = field(default_factory=SaParams)
    pso: PsoParams = field(default_factory=PsoParams)


def _as_box(problem, pen: float = 0.3) -> BoxProblem:
    if isinstance(problem, BoxProblem):
        return problem
    if isinstance(problem, ConstrainedProblem):
        return problem.as_box(pen)
    raise InvalidInputError("a bounded continuous problem is required")


def _vec_solution(x: np.ndarray, f: float) -> Solution:
    return Solution((), f, f, x=np.array(x, dtype=float))


def _spread(pop: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Mean per-coordinate standard deviation relative to the range."""
    return float(np.mean(np.std(pop, axis=0) / (hi - lo)))


# ---------------------------------------------------------------------------
# standard ACO
# ---------------------------------------------------------------------------


def run_standard_aco(problem: ProblemInstance, params: AcoParams | None = None, seed: int = 0):
    """Random-proportional ants with evaporation and deposit only."""
    params = params or AcoParams()
    ep = EacoParams(alpha_exp=params.alpha_exp, beta_exp=params.beta_exp, rho_local=params.rho,
                    q0=0.0, q_reward=params.q_reward, m_ants=params.m_ants, seed=seed,
                    max_iterations=params.max_iterations, target_objective=params.target,
                    adaptive_rho=False, elitist=False, clamp=False, global_update=False,
                    self_adaptive=False)
    return run(problem, ep, operators=None)


# ---------------------------------------------------------------------------
# real-coded GA
# ---------------------------------------------------------------------------


def _tournament(fit: np.ndarray, k: int, rng) -> int:
    idx = rng.integers(len(fit), size=k)
    return int(idx[np.argmin(fit[idx])])


def run_real_coded_ga(problem, params: GaParams | None = None, seed: int = 0, pen: float = 0.3):
    """Generational GA: tournament selection, Laplace crossover, power
    mutation, and the best individuals copied unchanged."""
    params = params or GaParams()
    box = _as_box(problem, pen)
    lo, hi = box.lower, box.upper
    rng = np.random.default_rng(seed)
    n, d = params.pop_size, box.dimension
    pop = rng.uniform(lo, hi, size=(n, d))
    fit = np.array([box.value(x) for x in pop])
    record = ConvergenceRecord()
    record.evaluations = n
    for t in range(1, params.max_iterations + 1):
        order = np.argsort(fit, kind="stable")
        children = [pop[i].copy() for i in order[:params.elite]]
        while len(children) < n:
            a = pop[_tournament(fit, params.tournament, rng)]
            b = pop[_tournament(fit, params.tournament, rng)]
            if rng.random() < params.p_crossover:
                c1, c2 = laplace_crossover(a, b, lo, hi, rng, b=params.laplace_b)
            else:
                c1, c2 = a.copy(), b.copy()
            for c in (c1, c2):
                if len(children) < n:
                    children.append(power_mutation(c, lo, hi, rng, params.power_index, params.p_mutation))
        new = np.array(children)
        new_fit = np.empty(n)
        new_fit[:params.elite] = fit[order[:params.elite]]
        new_fit[params.elite:] = [box.value(x) for x in new[params.elite:]]
        record.evaluations += n - params.elite
        pop, fit = new, new_fit
        b = int(np.argmin(fit))
        record.add(t, float(fit[b]), float(fit[b]), float(np.mean(fit)), _spread(pop, lo, hi),
                   NAN, NAN, NAN, params.p_crossover, params.p_mutation)
        if params.target is not None and fit[b] <= params.target:
            break
    b = int(np.argmin(fit))
    return _vec_solution(pop[b], float(fit[b])), record


# ---------------------------------------------------------------------------
# simulated annealing
# ---------------------------------------------------------------------------


def acceptance_probability(delta: float, temperature: float) -> float:
    """Metropolis rule."""
    if delta <= 0:
        return 1.0
    if temperature <= 0:
        return 0.0
    return math.exp(-delta / temperature)


def run_simulated_annealing(problem, params: SaParams | None = None, seed: int = 0, pen: float = 0.3):
    """Metropolis search with geometric cooling; one iteration is one
    temperature stage of ``steps_per_temp`` proposals."""
    params = params or SaParams()
    rng = np.random.default_rng(seed)
    if isinstance(problem, ProblemInstance):
        if problem.kind != "tour":
            raise InvalidInputError("permutation annealing needs a tour problem")
        current = list(rng.permutation(problem.n))

        def value(s):
            return problem.evaluate(s).objective

        def propose(s, temp_frac):
            i, j = sorted(int(v) for v in rng.choice(len(s), size=2, replace=False))
            return invert(s, i, j)

        def finish(s, f):
            return problem.evaluate(s)
    else:
        box = _as_box(problem, pen)
        lo, hi = box.lower, box.upper
        current = rng.uniform(lo, hi)
        value = box.value

        def propose(x, temp_frac):
            # one coordinate moves; the step shrinks with the temperature
            y = x.copy()
            i = int(rng.integers(len(y)))
            sigma = max(params.step_scale * math.sqrt(temp_frac), params.min_step) * (hi[i] - lo[i])
            y[i] = np.clip(y[i] + rng.normal(0.0, sigma), lo[i], hi[i])
            return y

        def finish(x, f):
            return _vec_solution(x, f)

    f_cur = value(current)
    record = ConvergenceRecord()
    record.evaluations = 1
    temp = params.t0
    if temp is None:
        # median uphill step of a few random proposals, accepted at ~50%
        deltas = [value(propose(current, 1.0)) - f_cur for _ in range(20)]
        record.evaluations += 20
        up = [v for v in deltas if v > 0 and math.isfinite(v)]
        temp = float(np.median(up)) / math.log(2.0) if up else 1.0
    t_init = max(temp, 1e-300)
    best, f_best = current, f_cur
    for t in range(1, params.max_iterations + 1):
        vals = []
        for _ in range(params.steps_per_temp):
            cand = propose(current, temp / t_init)
            f_c = value(cand)
            if rng.random() < acceptance_probability(f_c - f_cur, temp):
                current, f_cur = cand, f_c
                if f_cur < f_best:
                    best, f_best = current, f_cur
            vals.append(f_cur)
        record.evaluations += params.steps_per_temp
        record.add(t, f_best, f_cur, float(np.mean(vals)), NAN, NAN, NAN, NAN, NAN, NAN)
        temp *= params.cooling
        if params.target is not None and f_best <= params.target:
            break
    return finish(best, f_best), record


# ---------------------------------------------------------------------------
# particle swarm
# ---------------------------------------------------------------------------


def run_pso(problem, params: PsoParams | None = None, seed: int = 0, pen: float = 0.3,
            init_positions: np.ndarray | None = None, init_velocities: np.ndarray | None = None):
    """Inertia-weight PSO with a global-best topology and bound clipping."""
    params = params or PsoParams()
    box = _as_box(problem, pen)
    lo, hi = box.lower, box.upper
    rng = np.random.default_rng(seed)
    d = box.dimension
    if init_positions is not None:
        x = np.clip(np.array(init_positions, dtype=float).reshape(-1, d), lo, hi)
    else:
        x = rng.uniform(lo, hi, size=(params.swarm, d))
    n = len(x)
    vmax = params.vmax_frac * (hi - lo)
    if init_velocities is not None:
        v = np.array(init_velocities, dtype=float).reshape(n, d)
    else:
        v = rng.uniform(-vmax, vmax, size=(n, d))
    f = np.array([box.value(p) for p in x])
    pbest, pf = x.copy(), f.copy()
    g = int(np.argmin(pf))
    record = ConvergenceRecord()
    record.evaluations = n
    for t in range(1, params.max_iterations + 1):
        r1, r2 = rng.random((n, d)), rng.random((n, d))
        v = params.inertia * v + params.c1 * r1 * (pbest - x) + params.c2 * r2 * (pbest[g] - x)
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lo, hi)
        f = np.array([box.value(p) for p in x])
        record.evaluations += n
        better = f < pf
        pbest[better], pf[better] = x[better], f[better]
        g = int(np.argmin(pf))
        record.add(t, float(pf[g]), float(f.min()), float(np.mean(f)), _spread(x, lo, hi),
                   NAN, NAN, NAN, NAN, NAN)
        if params.target is not None and pf[g] <= params.target:
            break
    return _vec_solution(pbest[g], float(pf[g])), record
