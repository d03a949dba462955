"""Enhanced ant colony loop: construction, pheromone updates, elitist gating,
adaptive deposit weights, min-max clamping and convergence recording.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import (
    InvalidInputError,
    PheromoneMatrix,
    ProblemInstance,
    Solution,
    init_pheromone,
)

log = logging.getLogger(__name__)

RECORD_COLUMNS = (
    "t",
    "best",
    "iteration_best",
    "mean",
    "diversity",
    "tau_min",
    "tau_max",
    "tau_mean",
    "p_crossover",
    "p_mutation",
)


class DeadEndError(RuntimeError):
    """An ant has no feasible successor."""


class ConstructionError(RuntimeError):
    """Every ant of an iteration dead-ended."""


class InvalidObjectiveError(ValueError):
    """A pheromone rule met a non-positive cost."""


@dataclass
class EacoParams:
    alpha_exp: float = 1.0
    beta_exp: float = 5.0
    rho_local: float = 0.2
    alpha_global: float = 0.1
    q0: float = 0.8
    q_reward: float = 100.0
    q_global: float = 100.0
    sigma_elite: int = 5
    m_ants: int = 20
    tau0: float | None = None
    tau_min: float | None = None
    tau_max: float | None = None
    pen: float = 0.3
    adaptive_rho: bool = True
    lambda_decay: float = 0.5  # carried for completeness; no update rule reads it
    max_iterations: int = 1000
    target_objective: float | None = None
    seed: int = 0
    p_crossover: float = 0.6
    p_mutation: float = 0.5
    self_adaptive: bool = True
    global_update: bool = True
    elitist: bool = True
    clamp: bool = True
    stagnation_limit: int = 25

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (0 < self.rho_local < 1, "rho_local must lie in (0, 1)"),
            (0 < self.alpha_global < 1, "alpha_global must lie in (0, 1)"),
            (0 <= self.q0 <= 1, "q0 must lie in [0, 1]"),
            (self.m_ants >= 1, "m_ants must be >= 1"),
            (self.alpha_exp >= 0, "alpha_exp must be >= 0"),
            (self.beta_exp >= 0, "beta_exp must be >= 0"),
            (self.sigma_elite >= 0, "sigma_elite must be >= 0"),
            (self.q_reward > 0, "q_reward must be positive"),
            (self.max_iterations >= 1, "max_iterations must be >= 1"),
            (0 <= self.p_crossover <= 1, "p_crossover must lie in [0, 1]"),
            (0 <= self.p_mutation <= 1, "p_mutation must lie in [0, 1]"),
            (0 < self.lambda_decay < 1, "lambda_decay must lie in (0, 1)"),
        ]
        if self.tau_min is not None and self.tau_max is not None:
            checks.append((self.tau_min < self.tau_max, "tau_min must be below tau_max"))
        for ok, msg in checks:
            if not ok:
                raise InvalidInputError(msg)

    def with_overrides(self, **kw) -> "EacoParams":
        known = {f.name for f in fields(self)}
        bad = set(kw) - known
        if bad:
            raise InvalidInputError(f"unknown EACO parameter(s): {sorted(bad)}")
        return replace(self, **kw)


@dataclass
class Ant:
    current: int
    tabu: list[int]
    visited: np.ndarray
    length: float = 0.0


@dataclass
class ColonyState:
    t: int = 0
    d_min_history: list[float] = field(default_factory=list)
    d_aver: list[float] = field(default_factory=list)
    best_so_far: Solution | None = None
    iteration_best: Solution | None = None


@dataclass
class ConvergenceRecord:
    rows: list[tuple] = field(default_factory=list)
    trace: list[list[tuple[int, ...]]] = field(default_factory=list)
    elitist_iterations: list[int] = field(default_factory=list)
    construction_failures: int = 0
    evaluations: int = 0
    bounds_violations: int = 0

    def add(self, *row) -> None:
        self.rows.append(tuple(row))

    def column(self, name: str) -> np.ndarray:
        i = RECORD_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def iterations_to(self, threshold: float) -> int | None:
        """First iteration whose best-so-far objective is <= threshold."""
        for row in self.rows:
            if row[1] <= threshold:
                return int(row[0])
        return None

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_COLUMNS)
            for row in self.rows:
                w.writerow([row[0]] + [fmt6(v) for v in row[1:]])


def fmt6(v: float) -> str:
    return f"{float(v):.6g}"


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------


def transition_probabilities(tau_row, eta_row, allowed, alpha_exp: float, beta_exp: float) -> np.ndarray:
    """Random-proportional rule over the allowed successors.

    Works on a single row or on a batch (leading dimensions broadcast).
    Entries for non-allowed nodes are exactly zero.
    """
    allowed = np.asarray(allowed, dtype=bool)
    if not np.all(allowed.any(axis=-1)):
        raise DeadEndError("no allowed successor")
    w = np.power(tau_row, alpha_exp) * np.power(eta_row, beta_exp)
    w = np.where(allowed, w, 0.0)
    total = w.sum(axis=-1, keepdims=True)
    bad = ~(np.isfinite(total) & (total > 0))
    if np.any(bad):
        # underflow or overflow: fall back to uniform over the allowed set
        uniform = allowed / allowed.sum(axis=-1, keepdims=True)
        w = np.where(bad, uniform, w)
        total = np.where(bad, 1.0, total)
    return w / total


def select_next_node(probabilities, q0: float, rng: np.random.Generator) -> int:
    """Pseudo-random-proportional choice: exploit the argmax with probability
    q0, otherwise sample from ``probabilities``.  Ties go to the lowest id."""
    p = np.asarray(probabilities, dtype=float)
    if rng.random() < q0:
        return int(np.argmax(p))
    return _sample(p, rng)


def _sample(p: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(p)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    if idx >= len(p) or p[idx] == 0.0:
        idx = int(np.flatnonzero(p)[-1])
    return idx


def _choose(w: np.ndarray, q0: float, rng: np.random.Generator) -> int:
    """Index into candidate weights ``w`` (candidates sorted by id)."""
    if rng.random() < q0:
        return int(np.argmax(w))
    total = w.sum()
    if not (np.isfinite(total) and total > 0):
        return int(rng.integers(len(w)))
    return _sample(w / total, rng)


def _pick(w: np.ndarray, q0: float, u) -> int:
    """``_choose`` driven by two pre-drawn uniforms."""
    if u[0] < q0:
        return int(np.argmax(w))
    cum = np.cumsum(w)
    total = cum[-1]
    if not (np.isfinite(total) and total > 0):
        return min(int(u[1] * len(w)), len(w) - 1)
    idx = int(np.searchsorted(cum, u[1] * total, side="right"))
    if idx >= len(w) or w[idx] == 0.0:
        idx = int(np.flatnonzero(w)[-1])
    return idx


def construct_solution(problem: ProblemInstance, choice: np.ndarray, q0: float, rng: np.random.Generator) -> Solution | None:
    """Walk one ant through the graph; ``None`` signals that it got stuck.

    ``choice`` is the precomputed tau^alpha * eta^beta matrix for the
    current iteration; it is read only.  The ant draws its uniforms in
    blocks of n (two per step), so its decisions depend only on ``rng``.
    At a dead end the ant steps back one node, which stays tabu; it gives
    up only when it is pushed back to the start.
    """
    start = problem.start_node(rng)
    ant = Ant(start, [start], np.zeros(problem.n, dtype=bool))
    ant.visited[start] = True
    draws = rng.random((problem.n, 2))
    step = 0
    while not problem.is_complete(ant.tabu):
        cand = problem.candidates(ant.tabu, ant.visited)
        if cand.size == 0:
            if len(ant.tabu) == 1:
                return None
            ant.tabu.pop()
            ant.current = ant.tabu[-1]
            continue
        if step >= len(draws):
            draws = np.vstack([draws, rng.random((problem.n, 2))])
        nxt = int(cand[_pick(choice[ant.current, cand], q0, draws[step])])
        step += 1
        ant.tabu.append(nxt)
        ant.visited[nxt] = True
        ant.current = nxt
    return problem.evaluate(ant.tabu)


def greedy_pheromone_solution(tau: np.ndarray, problem: ProblemInstance, start: int | None = None) -> Solution | None:
    """Deterministic trail-following solution: always the argmax-tau successor."""
    cur = problem.greedy_start() if start is None else start
    path = [cur]
    visited = np.zeros(problem.n, dtype=bool)
    visited[cur] = True
    while not problem.is_complete(path):
        cand = problem.candidates(path, visited)
        if cand.size == 0:
            if len(path) == 1:
                return None
            path.pop()  # back off a dead end, as the ants do
            cur = path[-1]
            continue
        cur = int(cand[np.argmax(tau[cur, cand])])
        path.append(cur)
        visited[cur] = True
    return problem.evaluate(path)


# ---------------------------------------------------------------------------
# pheromone rules
# ---------------------------------------------------------------------------


def _edge_index(sol: Solution, symmetric: bool) -> tuple[np.ndarray, np.ndarray]:
    e = np.asarray(sol.edges(), dtype=int).reshape(-1, 2)
    if symmetric:
        return np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]])
    return e[:, 0], e[:, 1]


def _check_cost(cost: float) -> None:
    if not cost > 0 or not math.isfinite(cost):
        raise InvalidObjectiveError(f"pheromone rules need a positive finite cost, got {cost}")


def local_pheromone_update(tau, tours: Sequence[Solution], rho_local: float, q_reward: float,
                           symmetric: bool = True, weights: Sequence[float] | None = None) -> None:
    """tau <- (1 - rho) tau + rho * sum_k Q / L_k over the edges each ant used.

    ``weights`` replaces rho in the deposit term ant by ant (adaptive mode).
    """
    for s in tours:
        _check_cost(s.cost)
    tau *= 1.0 - rho_local
    for k, s in enumerate(tours):
        rows, cols = _edge_index(s, symmetric)
        coef = rho_local if weights is None else weights[k]
        np.add.at(tau, (rows, cols), coef * (q_reward / s.cost))


def global_pheromone_update(tau, global_best: Solution, alpha_global: float, symmetric: bool = True) -> None:
    _check_cost(global_best.cost)
    tau *= 1.0 - alpha_global
    rows, cols = _edge_index(global_best, symmetric)
    tau[rows, cols] += alpha_global * (1.0 / global_best.cost)


def elitist_update(tau, s_best: Solution, sigma_elite: float, q_reward: float, symmetric: bool = True) -> float:
    """Extra deposit sigma * Q / f(S_best) on the iteration-best edges."""
    _check_cost(s_best.cost)
    bonus = sigma_elite * q_reward / s_best.cost
    rows, cols = _edge_index(s_best, symmetric)
    tau[rows, cols] += bonus
    return bonus


def elitist_gate(d_min_t: float, d_min_prev: float, d_k: float, d_aver_t: float) -> bool:
    return d_min_t < d_min_prev and d_k < d_aver_t


def adaptive_rho(l_n: float, l_pn: float) -> float:
    if not (l_n > 0 and l_pn > 0):
        raise InvalidInputError("lengths must be positive")
    a, b = 1.0 / l_n, 1.0 / l_pn
    return a / (a + b)


def clamp_pheromone(tau, tau_min: float, tau_max: float) -> None:
    if not tau_min < tau_max:
        raise InvalidInputError("tau_min must be below tau_max")
    np.clip(tau, tau_min, tau_max, out=tau)


def g_score(path_cost: float, q_global: float) -> float:
    if not path_cost > 0:
        raise InvalidInputError("path cost must be positive")
    return q_global / path_cost


def default_bounds(params: EacoParams, n: int, l_ref: float) -> tuple[float, float]:
    """Steady-state trail level of an edge every ant (plus the elite) keeps
    reinforcing, and that level divided by 2n, where n is the branching
    factor (the node count on complete graphs)."""
    deposit = params.rho_local * params.m_ants * params.q_reward
    if params.elitist:
        deposit += params.sigma_elite * params.q_reward
    keep = 1.0 - params.rho_local
    if params.global_update:
        deposit += params.alpha_global
        keep *= 1.0 - params.alpha_global
    tau_max = deposit / ((1.0 - keep) * l_ref)
    return tau_max / (2 * n), tau_max


def iteration_rng(seed: int, t: int, stream: int) -> np.random.Generator:
    """Stream 0 feeds the ants (consumed in ant order), stream 1 the operators."""
    return np.random.default_rng([seed, t, stream])


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


def run(problem: ProblemInstance, params: EacoParams | None = None, operators="auto",
        trace: bool = False) -> tuple[Solution, ConvergenceRecord]:
    """Run the enhanced colony until ``max_iterations`` or the target.

    ``operators`` is an evolutionary refiner (see :mod:`eaco.operators`),
    ``"auto"`` to pick one from the problem kind, or ``None``.
    """
    from .operators import default_refiner, genotype_diversity, self_adapt_rates

    params = params or EacoParams()
    params.validate()
    refiner = default_refiner(problem) if operators == "auto" else operators

    n = problem.n
    l_ref = problem.reference_length()
    _check_cost(l_ref)
    lo, hi = default_bounds(params, problem.branching, l_ref)
    tau_min = params.tau_min if params.tau_min is not None else lo
    tau_max = params.tau_max if params.tau_max is not None else hi
    tau0 = params.tau0 if params.tau0 is not None else init_pheromone(n, l_ref)
    if params.clamp:
        pher = PheromoneMatrix.uniform(n, tau0, tau_min, tau_max)
    else:
        pher = PheromoneMatrix(np.full((n, n), tau0), tau0, tau_min, tau_max)
    eta_b = np.power(problem.eta, params.beta_exp)

    record = ConvergenceRecord()
    state = ColonyState()
    rates = (params.p_crossover, params.p_mutation)
    d_min_prev = math.inf
    stagnant = 0
    m = params.m_ants

    for t in range(1, params.max_iterations + 1):
        state.t = t
        tau = pher.tau
        choice = tau * eta_b if params.alpha_exp == 1.0 else np.power(tau, params.alpha_exp) * eta_b

        rng = iteration_rng(params.seed, t, 0)
        if hasattr(problem, "construct_batch"):
            sols = problem.construct_batch(choice, params.q0, m, rng)
        else:
            sols = []
            for k in range(m):
                s = construct_solution(problem, choice, params.q0, rng)
                if s is None:
                    record.construction_failures += 1
                else:
                    sols.append(s)
        record.evaluations += len(sols)
        if not sols:
            raise ConstructionError(
                f"all {m} ants dead-ended at iteration {t} "
                f"({record.construction_failures} failures so far)")
        if trace:
            record.trace.append([s.nodes for s in sols])

        if refiner is not None:
            before = refiner.evaluations
            pool = sols if state.best_so_far is None else sols + [state.best_so_far]
            sols = refiner.refine(pool, problem, rates, iteration_rng(params.seed, t, 1))
            record.evaluations += refiner.evaluations - before

        costs = np.array([s.cost for s in sols])
        d_min = float(costs.min())
        d_aver = float(costs.mean())
        it_best = sols[int(np.argmin(costs))]
        state.d_min_history.append(d_min)
        state.d_aver.append(d_aver)
        state.iteration_best = it_best
        improved = state.best_so_far is None or it_best.cost < state.best_so_far.cost
        if improved:
            state.best_so_far = it_best
        best = state.best_so_far

        weights = None
        if params.adaptive_rho:
            greedy = greedy_pheromone_solution(tau, problem)
            if greedy is not None and greedy.cost > 0:
                weights = [adaptive_rho(s.cost, greedy.cost) for s in sols]
        local_pheromone_update(tau, sols, params.rho_local, params.q_reward, problem.symmetric, weights)
        if params.global_update:
            global_pheromone_update(tau, best, params.alpha_global, problem.symmetric)
        if params.elitist and params.sigma_elite > 0 and elitist_gate(d_min, d_min_prev, it_best.cost, d_aver):
            elitist_update(tau, it_best, params.sigma_elite, params.q_reward, problem.symmetric)
            record.elitist_iterations.append(t)
        d_min_prev = d_min
        if params.clamp:
            clamp_pheromone(tau, pher.tau_min, pher.tau_max)
            if not pher.within_bounds():
                record.bounds_violations += 1

        diversity = genotype_diversity(sols)
        if refiner is not None and params.self_adaptive:
            rates = self_adapt_rates(diversity, float(d_min), float(d_aver))
        record.add(t, best.objective, it_best.objective, d_aver - problem.shift, diversity,
                   float(tau.min()), float(tau.max()), float(tau.mean()), rates[0], rates[1])

        stagnant = 0 if improved else stagnant + 1
        if stagnant >= params.stagnation_limit:
            moved = problem.refine(best, stagnant)
            if moved is not None:
                state.best_so_far = moved
                tau[:] = pher.tau0
                stagnant = 0

        if params.target_objective is not None and best.objective <= params.target_objective:
            break

    return state.best_so_far, record
