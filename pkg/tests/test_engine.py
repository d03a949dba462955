from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eaco import ConstructionGraph, EacoParams, InvalidInputError, Solution, TspProblem, run
from eaco.engine import (
    RECORD_COLUMNS,
    DeadEndError,
    InvalidObjectiveError,
    adaptive_rho,
    clamp_pheromone,
    construct_solution,
    default_bounds,
    elitist_gate,
    elitist_update,
    g_score,
    global_pheromone_update,
    greedy_pheromone_solution,
    local_pheromone_update,
    select_next_node,
    transition_probabilities,
)
from eaco.model import tour_length


def tsp(n, seed):
    coords = np.random.default_rng(seed).uniform(0, 100, size=(n, 2))
    return TspProblem(ConstructionGraph.from_coords(coords))


def brute_force(problem):
    n = problem.n
    return min(tour_length(problem.graph.dist, (0,) + p) for p in permutations(range(1, n)))


# --- selection -----------------------------------------------------------


def test_single_allowed_successor():
    p = transition_probabilities(np.ones(3), np.ones(3), [False, True, False], 1, 5)
    assert p.tolist() == [0.0, 1.0, 0.0]


def test_two_equal_successors():
    p = transition_probabilities(np.ones(2), np.ones(2), [True, True], 1, 5)
    assert p.tolist() == [0.5, 0.5]


def test_direct_normalisation():
    p = transition_probabilities(np.array([2.0, 1.0, 1.0]), np.array([3.0, 7.0, 9.0]), [True] * 3, 1, 0)
    assert p.tolist() == [0.5, 0.25, 0.25]


def test_dead_end_raises():
    with pytest.raises(DeadEndError):
        transition_probabilities(np.ones(3), np.ones(3), [False] * 3, 1, 5)


def test_underflow_falls_back_to_uniform():
    p = transition_probabilities(np.full(3, 1e-300), np.full(3, 1e-300), [True, False, True], 1, 5)
    assert p.tolist() == [0.5, 0.0, 0.5]


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2 ** 31), st.floats(0, 3), st.floats(0, 6))
def test_probabilities_normalised(n, seed, a, b):
    rng = np.random.default_rng(seed)
    tau = rng.uniform(1e-3, 10, n)
    eta = rng.uniform(1e-3, 10, n)
    allowed = rng.random(n) < 0.5
    allowed[rng.integers(n)] = True
    p = transition_probabilities(tau, eta, allowed, a, b)
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.all(p[~allowed] == 0.0)


def test_q0_one_always_argmax():
    rng = np.random.default_rng(0)
    p = np.array([0.2, 0.5, 0.3])
    assert all(select_next_node(p, 1.0, rng) == 1 for _ in range(200))


def test_argmax_ties_go_to_lowest_id():
    rng = np.random.default_rng(0)
    assert select_next_node(np.array([0.0, 0.4, 0.4, 0.2]), 1.0, rng) == 1


def test_q0_zero_single_option():
    assert select_next_node(np.array([0.0, 1.0]), 0.0, np.random.default_rng(1)) == 1


def test_sampling_frequencies():
    rng = np.random.default_rng(7)
    p = np.array([0.5, 0.25, 0.25])
    draws = np.array([select_next_node(p, 0.0, rng) for _ in range(100_000)])
    freq = np.bincount(draws, minlength=3) / len(draws)
    assert np.all(np.abs(freq - p) < 0.01)


# --- construction ----------------------------------------------------------


def test_two_node_tsp_unique_tour():
    p = TspProblem(ConstructionGraph.from_coords([(0, 0), (3, 4)]))
    sol = construct_solution(p, np.ones((2, 2)), 0.5, np.random.default_rng(0))
    assert sorted(sol.nodes) == [0, 1] and sol.cost == 10.0


def test_three_node_tours_have_equal_length():
    p = TspProblem(ConstructionGraph.from_coords([(0, 0), (4, 0), (0, 3)]))
    lengths = {construct_solution(p, np.ones((3, 3)), 0.0, np.random.default_rng(s)).cost for s in range(20)}
    assert lengths == {12.0}


def test_constructions_are_permutations():
    p = tsp(7, 1)
    choice = np.random.default_rng(0).uniform(0.1, 1, (7, 7))
    rng = np.random.default_rng(5)
    for _ in range(500):
        sol = construct_solution(p, choice, 0.3, rng)
        assert sorted(sol.nodes) == list(range(7))


# --- pheromone rules -------------------------------------------------------


def _sol(nodes, cost, closed=False):
    return Solution(tuple(nodes), cost, cost, closed=closed)


def test_local_update_examples():
    tau = np.ones((3, 3))
    local_pheromone_update(tau, [_sol([0, 1], 50.0)], 0.2, 100.0, symmetric=False)
    assert tau[0, 1] == pytest.approx(1.2)
    assert tau[1, 2] == pytest.approx(0.8)
    tau = np.ones((3, 3))
    local_pheromone_update(tau, [_sol([0, 1], 100.0), _sol([0, 1], 200.0)], 0.2, 100.0, symmetric=False)
    assert tau[0, 1] == pytest.approx(0.8 + 0.3)


def test_local_update_symmetric_mirrors():
    tau = np.ones((3, 3))
    local_pheromone_update(tau, [_sol([0, 1, 2], 50.0, closed=True)], 0.2, 100.0)
    assert np.array_equal(tau, tau.T)


def test_local_update_rejects_nonpositive_cost():
    with pytest.raises(InvalidObjectiveError):
        local_pheromone_update(np.ones((2, 2)), [_sol([0, 1], 0.0)], 0.2, 100.0)


def test_global_update_examples():
    tau = np.ones((3, 3))
    global_pheromone_update(tau, _sol([0, 1], 10.0), 0.1, symmetric=False)
    assert tau[0, 1] == pytest.approx(0.91)
    assert tau[1, 2] == pytest.approx(0.90)
    tau = np.ones((3, 3))
    global_pheromone_update(tau, _sol([0, 1], 10.0), 1e-15, symmetric=False)
    assert np.allclose(tau, 1.0)


def test_elitist_update_examples():
    tau = np.zeros((3, 3))
    assert elitist_update(tau, _sol([0, 1], 500.0), 5, 100.0, symmetric=False) == pytest.approx(1.0)
    assert tau[0, 1] == pytest.approx(1.0) and tau[1, 2] == 0.0
    tau = np.zeros((3, 3))
    assert elitist_update(tau, _sol([0, 1], 500.0), 0, 100.0) == 0.0
    assert np.all(tau == 0.0)


@pytest.mark.parametrize("args,want", [((10, 12, 10, 15), True), ((12, 12, 10, 15), False),
                                       ((10, 12, 16, 15), False)])
def test_elitist_gate(args, want):
    assert elitist_gate(*args) is want


@pytest.mark.parametrize("ln,lpn,want", [(7.0, 7.0, 0.5), (100, 300, 0.75), (300, 100, 0.25)])
def test_adaptive_rho_examples(ln, lpn, want):
    assert adaptive_rho(ln, lpn) == pytest.approx(want, abs=1e-15)


def test_adaptive_rho_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        adaptive_rho(0.0, 1.0)


@settings(max_examples=300)
@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
def test_adaptive_rho_range(a, b):
    r = adaptive_rho(a, b)
    assert 0 < r < 1
    # closed form of the offset from one half
    assert r - 0.5 == pytest.approx((b - a) / (2 * (a + b)), abs=1e-12)
    if a == b:
        assert abs(r - 0.5) <= 1e-12
    elif abs(a - b) / (a + b) > 1e-11:
        assert abs(r - 0.5) > 1e-12
        assert (r > 0.5) == (a < b)


def test_greedy_uniform_follows_lowest_ids(unit_square):
    p = TspProblem(unit_square)
    sol = greedy_pheromone_solution(np.ones((4, 4)), p, start=0)
    assert sol.nodes == (0, 1, 2, 3)


def test_greedy_follows_unique_cycle():
    p = tsp(5, 2)
    cycle = [0, 3, 1, 4, 2]
    tau = np.ones((5, 5))
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        tau[a, b] = 9.0
    assert greedy_pheromone_solution(tau, p, start=0).nodes == tuple(cycle)


def test_greedy_matches_stepwise_argmax():
    p = tsp(6, 4)
    tau = np.random.default_rng(9).uniform(0, 1, (6, 6))
    path, seen = [0], {0}
    while len(path) < 6:
        row = [(tau[path[-1], j], -j) for j in range(6) if j not in seen]
        nxt = -max(row)[1]
        path.append(nxt)
        seen.add(nxt)
    assert greedy_pheromone_solution(tau, p, start=0).nodes == tuple(path)


def test_clamp_branches():
    tau = np.array([0.0001, 0.5, 99.0])
    clamp_pheromone(tau, 0.001, 10.0)
    assert tau.tolist() == [0.001, 0.5, 10.0]
    with pytest.raises(InvalidInputError):
        clamp_pheromone(tau, 1.0, 1.0)


def test_g_score():
    assert g_score(50, 100) == 2.0
    assert g_score(100, 100) == 1.0
    assert g_score(10, 100) > g_score(20, 100)
    with pytest.raises(InvalidInputError):
        g_score(0, 100)


def test_bounds_scale_with_reward():
    p = EacoParams(global_update=False)
    lo, hi = default_bounds(p, 10, 50.0)
    lo2, hi2 = default_bounds(p.with_overrides(q_reward=200.0), 10, 50.0)
    assert hi2 == pytest.approx(2 * hi) and lo2 == pytest.approx(2 * lo)
    assert lo == pytest.approx(hi / 20)


# --- parameters and the main loop ------------------------------------------


@pytest.mark.parametrize("kw", [{"rho_local": 0.0}, {"rho_local": 1.0}, {"q0": 1.5}, {"m_ants": 0},
                                {"alpha_global": 0.0}, {"tau_min": 2.0, "tau_max": 1.0}])
def test_params_validation(kw):
    with pytest.raises(InvalidInputError):
        EacoParams(**kw)


def test_unknown_override_rejected():
    with pytest.raises(InvalidInputError):
        EacoParams().with_overrides(gamma=3)


def test_two_node_run():
    p = TspProblem(ConstructionGraph.from_coords([(0, 0), (3, 4)]))
    best, rec = run(p, EacoParams(max_iterations=1))
    assert best.cost == 10.0 and len(rec.rows) == 1


def test_run_is_deterministic():
    p = tsp(12, 0)
    a, ra = run(p, EacoParams(seed=4, max_iterations=30))
    b, rb = run(p, EacoParams(seed=4, max_iterations=30))
    assert a.nodes == b.nodes and ra.rows == rb.rows


def test_record_schema_and_monotone_best():
    p = tsp(10, 1)
    _, rec = run(p, EacoParams(seed=1, max_iterations=40))
    assert all(len(r) == len(RECORD_COLUMNS) for r in rec.rows)
    best = rec.column("best")
    assert np.all(np.diff(best) <= 0)
    assert rec.bounds_violations == 0


def test_target_stops_early():
    p = tsp(6, 3)
    opt = brute_force(p)
    best, rec = run(p, EacoParams(seed=0, max_iterations=500, target_objective=opt + 1e-9))
    assert best.cost == pytest.approx(opt)
    assert len(rec.rows) < 500
    assert rec.iterations_to(opt + 1e-9) == len(rec.rows)


def test_elitist_update_iff_gate_passes():
    p = tsp(10, 5)
    _, rec = run(p, EacoParams(seed=2, max_iterations=60))
    it_best = rec.column("iteration_best")
    mean = rec.column("mean")
    prev = np.concatenate([[np.inf], it_best[:-1]])
    expected = [t for t in range(1, len(it_best) + 1)
                if elitist_gate(it_best[t - 1], prev[t - 1], it_best[t - 1], mean[t - 1])]
    assert rec.elitist_iterations == expected
    assert expected


def test_six_node_optimum_found_most_runs():
    hits = 0
    for seed in range(100):
        p = tsp(6, 100 + seed)
        opt = brute_force(p)
        best, _ = run(p, EacoParams(seed=seed, max_iterations=200, target_objective=opt + 1e-9))
        hits += best.cost <= opt + 1e-9
    assert hits >= 95


def test_convergence_csv(tmp_path):
    _, rec = run(tsp(6, 0), EacoParams(max_iterations=3))
    path = tmp_path / "r.csv"
    rec.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(RECORD_COLUMNS)
    assert len(lines) == 4
