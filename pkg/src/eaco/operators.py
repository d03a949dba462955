"""Genetic operators used inside the colony and by the GA baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import InvalidInputError, ProblemInstance, Solution

P_MUT_RANGE = (0.05, 0.5)
P_CROSS_RANGE = (0.5, 1.0)


@dataclass
class Population:
    members: list[Solution]
    rates: tuple[float, float] = (0.6, 0.5)

    def __post_init__(self):
        if not all(0.0 <= r <= 1.0 for r in self.rates):
            raise InvalidInputError("rates must lie in [0, 1]")


@dataclass
class DiversityReport:
    genotype_diversity: float
    quality_weighted_mean: float


def _check_perms(p1, p2) -> tuple[list[int], list[int]]:
    a, b = [int(v) for v in p1], [int(v) for v in p2]
    if len(a) != len(b) or sorted(a) != sorted(b) or len(set(a)) != len(a):
        raise InvalidInputError("parents must be permutations of the same node set")
    return a, b


def is_permutation(seq, of: Sequence[int]) -> bool:
    return len(seq) == len(of) and sorted(int(v) for v in seq) == sorted(int(v) for v in of)


# ---------------------------------------------------------------------------
# permutation operators
# ---------------------------------------------------------------------------


def pmx_crossover(p1, p2, cut1: int | None = None, cut2: int | None = None,
                  rng: np.random.Generator | None = None) -> tuple[list[int], list[int]]:
    """Partially mapped crossover.  Child one keeps the [cut1, cut2) section
    of ``p1`` and fills the rest from ``p2`` through the section mapping."""
    a, b = _check_perms(p1, p2)
    n = len(a)
    if cut1 is None or cut2 is None:
        rng = rng or np.random.default_rng()
        cut1, cut2 = sorted(int(v) for v in rng.choice(n + 1, size=2, replace=False))
    if not 0 <= cut1 < cut2 <= n:
        raise InvalidInputError("cuts must satisfy 0 <= cut1 < cut2 <= n")
    return _pmx_child(a, b, cut1, cut2), _pmx_child(b, a, cut1, cut2)


def _pmx_child(keep, other, c1, c2):
    child = list(other)
    child[c1:c2] = keep[c1:c2]
    section = set(keep[c1:c2])
    pos_in_keep = {v: i for i, v in enumerate(keep)}
    for i in list(range(c1)) + list(range(c2, len(keep))):
        v = other[i]
        while v in section:
            v = other[pos_in_keep[v]]
        child[i] = v
    return child


def erx_crossover(p1, p2, rng: np.random.Generator) -> list[int]:
    """Edge recombination: follow the union edge map, preferring the
    neighbour with the fewest remaining links."""
    a, b = _check_perms(p1, p2)
    n = len(a)
    edges: dict[int, set[int]] = {v: set() for v in a}
    for tour in (a, b):
        for i, v in enumerate(tour):
            edges[v].add(tour[i - 1])
            edges[v].add(tour[(i + 1) % n])
    for v in edges:
        edges[v].discard(v)
    cur = a[0] if rng.random() < 0.5 else b[0]
    child = [cur]
    remaining = set(a)
    remaining.discard(cur)
    while remaining:
        for nbrs in edges.values():
            nbrs.discard(cur)
        options = sorted(edges[cur])
        if options:
            fewest = min(len(edges[v]) for v in options)
            ties = [v for v in options if len(edges[v]) == fewest]
        else:
            ties = sorted(remaining)
        cur = ties[int(rng.integers(len(ties)))] if len(ties) > 1 else ties[0]
        child.append(cur)
        remaining.discard(cur)
    return child


def invert(tour, i: int, j: int) -> list[int]:
    """Reverse the inclusive segment tour[i..j]."""
    t = list(tour)
    t[i:j + 1] = t[i:j + 1][::-1]
    return t


def mutate(tour, p_mutation: float, rng: np.random.Generator) -> list[int]:
    """Inversion mutation applied with probability ``p_mutation``."""
    t = list(tour)
    if len(t) < 2 or rng.random() >= p_mutation:
        return t
    i, j = sorted(int(v) for v in rng.choice(len(t), size=2, replace=False))
    return invert(t, i, j)


# ---------------------------------------------------------------------------
# real-coded operators
# ---------------------------------------------------------------------------


def laplace_beta(rng: np.random.Generator, a: float = 0.0, b: float = 0.35) -> float:
    u, r = rng.random(), rng.random()
    u = max(u, np.finfo(float).tiny)
    return a - b * np.log(u) if r <= 0.5 else a + b * np.log(u)


def laplace_crossover(x1, x2, lower, upper, rng: np.random.Generator | None = None,
                      a: float = 0.0, b: float = 0.35, beta: float | None = None):
    """Laplace crossover: both children move by beta * |x1 - x2| with one
    Laplace-distributed beta per coordinate; results are clipped to bounds."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if beta is None:
        rng = rng or np.random.default_rng()
        u = np.maximum(rng.random(x1.size), np.finfo(float).tiny)
        r = rng.random(x1.size)
        beta = np.where(r <= 0.5, a - b * np.log(u), a + b * np.log(u))
    step = np.asarray(beta) * np.abs(x1 - x2)
    c1 = np.clip(x1 + step, lower, upper)
    c2 = np.clip(x2 + step, lower, upper)
    return c1, c2


def power_mutation(x, lower, upper, rng: np.random.Generator, index: float = 0.25,
                   rate: float = 1.0) -> np.ndarray:
    """Power mutation: each selected coordinate jumps a power-distributed
    fraction s of the way to one of its bounds (the nearer bound is more
    likely).  ``index == 0`` leaves x unchanged."""
    x = np.asarray(x, dtype=float).copy()
    lower = np.broadcast_to(np.asarray(lower, dtype=float), x.shape)
    upper = np.broadcast_to(np.asarray(upper, dtype=float), x.shape)
    if index <= 0:
        return x
    for i in range(x.size):
        if rng.random() >= rate:
            continue
        s = rng.random() ** (1.0 / index)
        lo, hi = lower[i], upper[i]
        if hi <= lo:
            continue
        t = (x[i] - lo) / (hi - lo)
        if t < rng.random():
            x[i] = x[i] - s * (x[i] - lo)
        else:
            x[i] = x[i] + s * (hi - x[i])
    return np.clip(x, lower, upper)


# ---------------------------------------------------------------------------
# diversity and rate control
# ---------------------------------------------------------------------------


def _edge_set(member, closed: bool) -> frozenset:
    if isinstance(member, Solution):
        seq, closed = member.nodes, member.closed
    else:
        seq = [int(v) for v in member]
    pairs = list(zip(seq[:-1], seq[1:]))
    if closed and len(seq) > 2:
        pairs.append((seq[-1], seq[0]))
    return frozenset(frozenset(p) for p in pairs)


def edge_distance(e1: frozenset, e2: frozenset) -> float:
    size = max(len(e1), len(e2))
    if size == 0:
        return 0.0
    return 1.0 - len(e1 & e2) / size


def genotype_diversity(population, closed: bool = True) -> float:
    """Mean pairwise fraction of non-shared edges (0 = all identical)."""
    members = list(population)
    if not members:
        raise InvalidInputError("empty population")
    if len(members) == 1:
        return 0.0
    sets = [_edge_set(m, closed) for m in members]
    # membership matrix; shared-edge counts come out of one product
    index: dict = {}
    rows, cols = [], []
    for i, es in enumerate(sets):
        for e in es:
            rows.append(i)
            cols.append(index.setdefault(e, len(index)))
    inc = np.zeros((len(sets), len(index)))
    inc[rows, cols] = 1.0
    shared = inc @ inc.T
    size = inc.sum(axis=1)
    denom = np.maximum(size[:, None], size[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = np.where(denom > 0, 1.0 - shared / denom, 0.0)
    iu = np.triu_indices(len(sets), 1)
    return float(np.mean(dist[iu]))


def diversity_report(population: Sequence[Solution], q_global: float = 100.0) -> DiversityReport:
    from .engine import g_score

    g = np.array([g_score(s.cost, q_global) for s in population])
    c = np.array([s.cost for s in population])
    return DiversityReport(genotype_diversity(population), float(np.sum(g * c) / np.sum(g)))


def self_adapt_rates(diversity: float, best_quality: float, mean_quality: float,
                     d_low: float = 0.2, gap_ref: float = 0.1) -> tuple[float, float]:
    """Linear ramps: mutation grows as diversity drops below ``d_low``;
    crossover grows as the relative best/mean quality gap closes."""
    mut_lo, mut_hi = P_MUT_RANGE
    cross_lo, cross_hi = P_CROSS_RANGE
    low = max(0.0, (d_low - diversity) / d_low)
    p_mut = mut_lo + (mut_hi - mut_lo) * low
    denom = abs(mean_quality)
    gap = abs(mean_quality - best_quality) / denom if denom > 0 else 0.0
    p_cross = cross_lo + (cross_hi - cross_lo) * max(0.0, 1.0 - gap / gap_ref)
    return float(np.clip(p_cross, cross_lo, cross_hi)), float(np.clip(p_mut, mut_lo, mut_hi))


# ---------------------------------------------------------------------------
# refinement hooks the engine calls after construction
# ---------------------------------------------------------------------------


@dataclass
class PermutationRefiner:
    """Rank-paired crossover then inversion mutation over closed tours.

    A child replaces the worse parent (a mutant its original) when it is no
    worse, so equal-cost moves keep the population drifting.
    """

    crossover: str = "erx"
    evaluations: int = 0

    def refine(self, sols: list[Solution], problem: ProblemInstance, rates, rng) -> list[Solution]:
        p_cross, p_mut = rates
        pop = sorted(sols, key=lambda s: s.cost)
        for i in range(0, len(pop) - 1, 2):
            if rng.random() >= p_cross:
                continue
            a, b = pop[i].nodes, pop[i + 1].nodes
            if self.crossover == "erx":
                kids = [erx_crossover(a, b, rng)]
            else:
                kids = list(pmx_crossover(a, b, rng=rng))
            evaluated = [problem.evaluate(k) for k in kids]
            self.evaluations += len(evaluated)
            child = min(evaluated, key=lambda s: s.cost)
            if child.cost <= pop[i + 1].cost:
                pop[i + 1] = child
        for i, s in enumerate(pop):
            if rng.random() >= p_mut:
                continue
            cand = problem.evaluate(mutate(s.nodes, 1.0, rng))
            self.evaluations += 1
            if cand.cost <= s.cost:
                pop[i] = cand
        return pop


@dataclass
class VectorRefiner:
    """Laplace crossover and power mutation on decoded real vectors for
    layered (discretized continuous) problems."""

    b: float = 0.35
    index: float = 0.25
    evaluations: int = 0

    def refine(self, sols, problem, rates, rng) -> list[Solution]:
        p_cross, p_mut = rates
        lo, hi = problem.bounds()
        pop = sorted(sols, key=lambda s: s.cost)
        # every member is recombined with the current best
        for i in range(1, len(pop)):
            if rng.random() >= p_cross:
                continue
            x1, x2 = problem.decode_solution(pop[0]), problem.decode_solution(pop[i])
            c1, c2 = laplace_crossover(x1, x2, lo, hi, rng, b=self.b)
            kids = [problem.evaluate_x(c1), problem.evaluate_x(c2)]
            self.evaluations += 2
            child = min(kids, key=lambda s: s.cost)
            if child.cost <= pop[0].cost:
                pop[0], pop[i] = child, pop[0]
            elif child.cost <= pop[i].cost:
                pop[i] = child
        d = len(lo)
        for i, s in enumerate(pop):
            if rng.random() >= p_mut:
                continue
            x = problem.decode_solution(s)
            cand = problem.evaluate_x(power_mutation(x, lo, hi, rng, self.index, rate=1.0 / d))
            self.evaluations += 1
            if cand.cost <= s.cost:
                pop[i] = cand
        return pop


def default_refiner(problem: ProblemInstance):
    if problem.kind == "tour":
        return PermutationRefiner()
    if problem.kind == "layered":
        return VectorRefiner()
    return None
