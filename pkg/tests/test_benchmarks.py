import math
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eaco import EacoParams, run
from eaco.engine import construct_solution, greedy_pheromone_solution
from eaco.benchmarks import (
    DiscretizationScheme,
    Environment,
    EnvironmentInfeasibleError,
    LayeredProblem,
    build_waypoint_graph,
    discretize,
    g_function,
    get_problem,
    oracle_shortest_path,
    oracle_tsp,
    pen_scale,
    penalized_objective,
    penalty,
    random_environment,
    read_environment,
    segment_collides,
    shrink_ranges,
    write_environment,
)
from eaco.benchmarks.gfuncs import ConstrainedProblem
from eaco.model import ConstructionGraph, InvalidInputError, tour_length

SQUARE = np.array([(4.0, 4.0), (6.0, 4.0), (6.0, 6.0), (4.0, 6.0)])


# --- constrained benchmarks --------------------------------------------------


def test_g1_optimum_point():
    g1 = get_problem("g1")
    f, cons = g_function(1, g1.x_star)
    assert f == -15.0
    assert np.all(cons <= 0)
    assert penalized_objective(g1.x_star, g1) == -15.0


def test_reported_optima():
    assert get_problem(1).reported_optimum == -15.012
    assert get_problem(2).reported_optimum == 7050.331
    assert get_problem(3).reported_optimum == 680.538
    assert get_problem(4).stub


@pytest.mark.parametrize("pid,want", [(2, 7049.248), (3, 680.630)])
def test_g2_g3_reference_points(pid, want):
    p = get_problem(pid)
    assert p.f(p.x_star) == pytest.approx(want, rel=1e-5)


def test_single_violation_penalty():
    prob = ConstrainedProblem("t", [0.0], [10.0], lambda x: float(x[0]), lambda x: np.array([2.0]))
    assert penalty(np.array([1.0]), prob, 100.0) == 400.0
    assert penalized_objective([1.0], prob, pen=0.1) == 1.0 + pen_scale(0.1, prob) * 4.0


def test_penalty_rejects_out_of_bounds():
    with pytest.raises(InvalidInputError):
        penalized_objective(np.full(13, 2.0), get_problem(1))
    with pytest.raises(InvalidInputError):
        penalized_objective(np.zeros(3), get_problem(1))
    with pytest.raises(InvalidInputError):
        get_problem("g9")


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31))
def test_penalised_not_below_raw(pid, seed):
    p = get_problem(pid)
    x = np.random.default_rng(seed).uniform(p.lower, p.upper)
    val = penalized_objective(x, p)
    f = float(p.f(x))
    assert val >= f
    assert (val == f) == p.is_feasible(x)


# --- discretisation -------------------------------------------------------------


def test_three_levels_on_unit_interval():
    s = DiscretizationScheme.for_bounds([0.0], [1.0], levels=3)
    assert s.grid().tolist() == [[0.0, 0.5, 1.0]]


def test_lowest_path_decodes_to_lower_bounds():
    prob = LayeredProblem(lambda x: float(np.sum(x)), DiscretizationScheme.for_bounds([-1, 2], [1, 5], 4))
    nodes = prob.nodes_of([0, 0])
    assert prob.decode(nodes).tolist() == [-1.0, 2.0]


def test_encode_decode_roundtrip_on_grid():
    s = DiscretizationScheme.for_bounds([0, -2, 5], [1, 2, 9], levels=5)
    prob = LayeredProblem(lambda x: 0.0, s)
    for idx in np.ndindex(5, 5, 5):
        x = s.decode_levels(idx)
        assert prob.levels_of(prob.encode(x)).tolist() == list(idx)


def test_anchors_cover_original_box():
    s = DiscretizationScheme.for_bounds([0.0], [10.0], levels=3, anchors=3)
    s = shrink_ranges(s, [5.0], 0.5)
    assert s.grid().tolist() == [[2.5, 5.0, 7.5, 0.0, 5.0, 10.0]]
    assert s.width == 6


def test_shrink_examples():
    s = DiscretizationScheme.for_bounds([0.0, 0.0], [10.0, 4.0], levels=3)
    same = shrink_ranges(s, [3.0, 1.0], 1.0)
    assert np.allclose(same.upper - same.lower, [10.0, 4.0])
    half = shrink_ranges(s, [5.0, 2.0], 0.5)
    assert half.lower.tolist() == [2.5, 1.0] and half.upper.tolist() == [7.5, 3.0]


def test_shrink_slides_window_inside():
    s = DiscretizationScheme.for_bounds([0.0], [10.0], levels=3)
    s = shrink_ranges(s, [9.9], 0.5)
    assert s.lower.tolist() == [5.0] and s.upper.tolist() == [10.0]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.1, 1.0))
def test_repeated_shrinking_stays_inside(seed, gamma):
    rng = np.random.default_rng(seed)
    lo, hi = rng.uniform(-5, 0, 3), rng.uniform(1, 5, 3)
    s = DiscretizationScheme.for_bounds(lo, hi, levels=5, gamma=gamma)
    for _ in range(50):
        s = shrink_ranges(s, rng.uniform(lo - 1, hi + 1))
        assert np.all(s.lower >= lo) and np.all(s.upper <= hi)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_decoded_paths_inside_bounds(seed):
    rng = np.random.default_rng(seed)
    prob = discretize(get_problem(rng.integers(1, 4)))
    for _ in range(20):
        idx = rng.integers(0, prob.scheme.width, prob.dimension)
        x = prob.decode(prob.nodes_of(idx))
        lo, hi = prob.bounds()
        assert np.all((x >= lo) & (x <= hi))


def test_batch_construction_matches_generic_walk():
    from eaco.engine import construct_solution

    prob = discretize(get_problem(3), levels=4, anchors=0)
    choice = np.random.default_rng(0).uniform(0.1, 1.0, (prob.n, prob.n))
    batch = prob.construct_batch(choice, 0.0, 50, np.random.default_rng(1))
    assert all(len(s.nodes) == prob.dimension + 1 for s in batch)
    greedy = prob.construct_batch(choice, 1.0, 2, np.random.default_rng(1))
    walk = construct_solution(prob, choice, 1.0, np.random.default_rng(1))
    assert greedy[0].nodes == walk.nodes


def test_scheme_validation():
    with pytest.raises(InvalidInputError):
        DiscretizationScheme.for_bounds([0.0], [1.0], levels=1)
    with pytest.raises(InvalidInputError):
        DiscretizationScheme.for_bounds([1.0], [0.0])
    with pytest.raises(InvalidInputError):
        DiscretizationScheme.for_bounds([0.0], [1.0], gamma=0.0)


# --- environments and waypoint graphs --------------------------------------------


def test_segment_collision_cases():
    assert segment_collides((0, 5), (10, 5), [SQUARE])
    assert not segment_collides((0, 0), (10, 0), [SQUARE])
    assert segment_collides((0, 8), (8, 0), [SQUARE])  # grazes the (4, 4) corner


def test_empty_environment_path():
    env = Environment((0, 0, 5, 5), [], (0, 0), (5, 3))
    wg, prob = build_waypoint_graph(env, 1.0)
    sol = oracle_shortest_path(wg)
    assert sol.cost >= math.hypot(5, 3) - 1e-12
    assert sol.cost == pytest.approx(3 * math.sqrt(2) + 2)


def test_wall_with_gap_edges_are_clear():
    wall_low = np.array([(4.6, -1.0), (5.4, -1.0), (5.4, 4.0), (4.6, 4.0)])
    wall_high = np.array([(4.6, 6.0), (5.4, 6.0), (5.4, 11.0), (4.6, 11.0)])
    env = Environment((0, 0, 10, 10), [wall_low, wall_high], (1, 1), (9, 9))
    wg, prob = build_waypoint_graph(env, 1.0)
    for i, j in wg.edges():
        assert not segment_collides(wg.coords[i], wg.coords[j], env.polygons)
    assert oracle_shortest_path(wg).cost > math.hypot(8, 8)



def test_ants_back_out_of_dead_ends():
    # two staggered walls leave pockets that trap a forward-only walk
    walls = [np.array([(4.0, 0.0), (6.0, 0.0), (6.0, 14.0), (4.0, 14.0)]),
             np.array([(12.0, 6.0), (14.0, 6.0), (14.0, 20.0), (12.0, 20.0)])]
    env = Environment((0, 0, 20, 20), walls, (1, 1), (19, 19))
    wg, prob = build_waypoint_graph(env, 1.0)
    choice = prob.eta ** 5
    rng = np.random.default_rng(0)
    for _ in range(50):
        sol = construct_solution(prob, choice, 0.0, rng)
        assert sol is not None
        nodes = list(sol.nodes)
        assert nodes[0] == prob.start and nodes[-1] == prob.goal
        assert len(set(nodes)) == len(nodes)
        assert all(b in prob.neighbors[a] for a, b in zip(nodes, nodes[1:]))
        assert prob.is_collision_free(sol, env)
    assert greedy_pheromone_solution(np.ones((prob.n, prob.n)), prob) is not None

def test_blocked_corridor_is_infeasible():
    wall = np.array([(4.0, -1.0), (6.0, -1.0), (6.0, 11.0), (4.0, 11.0)])
    env = Environment((0, 0, 10, 10), [wall], (1, 1), (9, 9))
    with pytest.raises(EnvironmentInfeasibleError):
        build_waypoint_graph(env, 1.0)


def test_start_inside_obstacle_rejected():
    with pytest.raises(InvalidInputError):
        Environment((0, 0, 10, 10), [SQUARE], (5, 5), (9, 9))
    with pytest.raises(InvalidInputError):
        Environment((0, 0, 10, 10), [SQUARE[:2]], (1, 1), (9, 9))


def test_environment_file_roundtrip(tmp_path):
    env = random_environment(np.random.default_rng(3))
    path = tmp_path / "env.txt"
    write_environment(path, env)
    back = read_environment(path)
    assert back.box == env.box and back.start == env.start
    assert all(np.allclose(a, b) for a, b in zip(back.obstacles, env.obstacles))


def test_environment_file_errors(tmp_path):
    path = tmp_path / "env.txt"
    path.write_text("box 0 0 10 10\nstart 1 1\ngoal 9 9\npoly 1 2 3\n")
    with pytest.raises(InvalidInputError, match=":4:"):
        read_environment(path)
    path.write_text("box 0 0 10 10\nstart 1 1 0.5\n")
    with pytest.raises(InvalidInputError):
        read_environment(path)


def test_random_environment_all_edges_clear():
    env = random_environment(np.random.default_rng(11))
    wg, _ = build_waypoint_graph(env, 1.0)
    lines = list(wg.edges())
    assert lines
    for i, j in lines:
        assert not segment_collides(wg.coords[i], wg.coords[j], env.polygons)


# --- oracles ---------------------------------------------------------------------


def test_oracle_path_3x3_diagonal():
    env = Environment((0, 0, 2, 2), [], (0, 0), (2, 2))
    wg, _ = build_waypoint_graph(env, 1.0)
    assert oracle_shortest_path(wg).cost == pytest.approx(2 * math.sqrt(2))


def test_oracle_path_matches_enumeration_4x4():
    env = Environment((0, 0, 3, 3), [np.array([(0.6, 1.4), (2.4, 1.4), (2.4, 1.6), (0.6, 1.6)])], (0, 0), (3, 3))
    wg, prob = build_waypoint_graph(env, 1.0)
    best = math.inf
    stack = [(wg.start, (wg.start,))]
    while stack:
        v, path = stack.pop()
        if v == wg.goal:
            best = min(best, prob.objective(path))
            continue
        for w in wg.neighbors[v]:
            if w not in path:
                stack.append((int(w), path + (int(w),)))
    assert oracle_shortest_path(wg).cost == pytest.approx(best, abs=1e-12)


def test_eaco_never_beats_path_oracle():
    env = random_environment(np.random.default_rng(2))
    wg, prob = build_waypoint_graph(env, 1.0)
    opt = oracle_shortest_path(wg).cost
    best, _ = run(prob, EacoParams(seed=0, max_iterations=40))
    assert best.cost >= opt - 1e-9
    assert prob.is_collision_free(best, env)


def test_oracle_tsp_small_cases(unit_square):
    assert oracle_tsp(unit_square).cost == 4.0
    tri = oracle_tsp([(0, 0), (3, 0), (0, 4)])
    assert tri.cost == 12.0


def test_oracle_tsp_matches_full_enumeration():
    pts = np.random.default_rng(5).uniform(0, 1, (8, 2))
    g = ConstructionGraph.from_coords(pts)
    best = min(tour_length(g.dist, (0,) + p) for p in permutations(range(1, 8)))
    assert oracle_tsp(g).cost == pytest.approx(best, abs=1e-12)


def test_oracle_tsp_refuses_large():
    with pytest.raises(InvalidInputError):
        oracle_tsp(np.zeros((11, 2)) + np.arange(11)[:, None])
