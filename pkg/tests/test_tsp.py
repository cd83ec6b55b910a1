import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cctp.core import MetricInstance, Scenario, validate_metric
from cctp.lowerbound import generate_hurkens
from cctp.tsp import (
    TourSizeError,
    MatchingTooLarge,
    christofides_tour,
    double_tree_tour,
    held_karp_optimal,
    metric_closure,
    min_weight_perfect_matching,
    minimum_spanning_tree,
    tour_cost,
)


# --- independent oracles ----------------------------------------------------

def prufer_min_tree_weight(c):
    """Minimum spanning tree weight by decoding every Pruefer sequence."""
    n = len(c)
    if n == 2:
        return c[0][1]
    best = np.inf
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for x in seq:
            degree[x] += 1
        w = 0.0
        for x in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            w += c[leaf][x]
            degree[leaf] -= 1
            degree[x] -= 1
        a, b = [i for i in range(n) if degree[i] == 1]
        best = min(best, w + c[a][b])
    return best


def brute_force_tsp(c, start=0):
    n = len(c)
    rest = [v for v in range(n) if v != start]
    return min(tour_cost(c, [start, *p]) for p in itertools.permutations(rest))


def brute_force_matching(c, vs):
    if not vs:
        return 0.0
    a, rest = vs[0], vs[1:]
    return min(c[a][b] + brute_force_matching(c, rest[:i] + rest[i + 1:]) for i, b in enumerate(rest))


def euclid(n, seed):
    return MetricInstance.from_points(np.random.default_rng(seed).random((n, 2)))


def is_tour(order, n, s):
    return sorted(order) == list(range(n)) and order[0] == s


# --- MST --------------------------------------------------------------------

def test_mst_unit_triangle_tie_break():
    mst = minimum_spanning_tree(MetricInstance(np.ones((3, 3))))
    assert mst.edges == [(0, 1), (0, 2)]
    assert mst.weight == 2


def test_mst_hurkens_path_weight():
    h = generate_hurkens(3)
    mst = minimum_spanning_tree(h.scenario.instance)
    assert mst.weight == 15 == h.n - 1
    # the u - l_3 - zigzag - r_3 path named in the lower-bound argument is one such tree
    path = [h.landmarks["u"], 0]
    for t in range(7):
        path += [8 + t, t + 1]
    assert len(set(path)) == 16
    assert sum(h.scenario.instance.cost(a, b) for a, b in zip(path, path[1:])) == 15


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
@pytest.mark.parametrize("seed", range(4))
def test_mst_matches_prufer(n, seed):
    inst = euclid(n, seed)
    assert minimum_spanning_tree(inst).weight == pytest.approx(prufer_min_tree_weight(inst.costs.tolist()), rel=1e-12)


# --- tours ------------------------------------------------------------------

def test_double_tree_unit_triangle():
    assert double_tree_tour(np.ones((3, 3))).cost == 3


def test_double_tree_collinear():
    inst = MetricInstance.from_points([[0, 0], [1, 0], [2, 0], [3, 0]])
    t = double_tree_tour(inst, 0)
    assert t.order == [0, 1, 2, 3]
    assert t.cost == 6


def test_christofides_unit_triangle():
    assert christofides_tour(np.ones((3, 3))).cost == 3


def test_christofides_square():
    inst = MetricInstance.from_points([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert held_karp_optimal(inst).cost == 4
    assert christofides_tour(inst).cost == 4


def test_matching_dp_matches_brute_force():
    for seed in range(10):
        inst = euclid(10, seed)
        vs = list(range(0, 10))
        pairs = min_weight_perfect_matching(inst, vs)
        assert sorted(x for p in pairs for x in p) == vs
        got = sum(inst.cost(a, b) for a, b in pairs)
        assert got == pytest.approx(brute_force_matching(inst.costs.tolist(), vs), rel=1e-12)


def test_christofides_matching_limit():
    inst = euclid(30, 0)
    with pytest.raises(MatchingTooLarge):
        christofides_tour(inst, matching_dp_limit=2, fallback=False)
    t = christofides_tour(inst, matching_dp_limit=2)
    assert t.method == "double-tree(fallback)"
    assert t.cost == double_tree_tour(inst).cost


def test_held_karp_small_cases():
    assert held_karp_optimal(np.ones((3, 3))).cost == 3
    assert held_karp_optimal(np.zeros((1, 1))).cost == 0
    assert held_karp_optimal(np.array([[0, 2.5], [2.5, 0]])).cost == 5


@pytest.mark.parametrize("seed", range(5))
def test_held_karp_matches_enumeration(seed):
    inst = euclid(8, seed)
    hk = held_karp_optimal(inst, start=3)
    assert is_tour(hk.order, 8, 3)
    assert hk.cost == pytest.approx(brute_force_tsp(inst.costs, 3), rel=1e-12)


def test_held_karp_hurkens_closure():
    h = generate_hurkens(3)
    assert held_karp_optimal(metric_closure(h.scenario), h.scenario.source).cost == 23


def test_held_karp_size_limit():
    with pytest.raises(TourSizeError):
        held_karp_optimal(np.ones((19, 19)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 10), seed=st.integers(0, 2**31))
def test_approximation_bounds(n, seed):
    inst = euclid(n, seed)
    opt = held_karp_optimal(inst).cost
    ch = christofides_tour(inst)
    dt = double_tree_tour(inst)
    for t in (ch, dt):
        assert is_tour(t.order, n, 0)
        assert t.cost == pytest.approx(tour_cost(inst, t.order))
    assert opt <= ch.cost * (1 + 1e-12) and ch.cost <= 1.5 * opt + 1e-9
    assert opt <= dt.cost * (1 + 1e-12) and dt.cost <= 2 * opt + 1e-9


def test_christofides_is_deterministic():
    inst = euclid(9, 11)
    assert christofides_tour(inst, 4).order == christofides_tour(inst, 4).order


# --- closure ----------------------------------------------------------------

def test_closure_no_blocks_is_identity_on_metric():
    inst = euclid(6, 2)
    assert np.allclose(metric_closure(Scenario(inst)), inst.costs)


def test_closure_single_blocked_edge():
    sc = Scenario(MetricInstance(np.ones((5, 5))), frozenset({(1, 3)}))
    d = metric_closure(sc)
    assert d[1, 3] == 2
    assert d[0, 1] == 1


def bfs_dist(n, open_edges, src):
    adj = {i: [] for i in range(n)}
    for a, b in open_edges:
        adj[a].append(b)
        adj[b].append(a)
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    nxt.append(y)
        frontier = nxt
    return dist


def test_closure_hurkens_matches_bfs():
    h = generate_hurkens(3)
    d = metric_closure(h.scenario)
    assert len(h.unblocked) == 22
    bfs = bfs_dist(16, h.unblocked, h.landmarks["u"])
    assert bfs[h.landmarks["r"]] == 8
    assert d[h.landmarks["u"], h.landmarks["r"]] == 8
    assert all(d[h.landmarks["u"], x] == bfs[x] for x in range(16))


@pytest.mark.parametrize("seed", range(5))
def test_closure_is_exactly_metric(seed):
    from cctp.core import generate_random_scenario

    sc = generate_random_scenario(10, 8, seed)
    assert validate_metric(metric_closure(sc), eps=0.0) == []
