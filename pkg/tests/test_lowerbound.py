from fractions import Fraction
from math import comb

import pytest

from cctp.core import Environment, is_connected, validate_metric
from cctp.explore import CompressedGraph, compress_and_explore, inject_tour, nn_explore
from cctp.lowerbound import (
    bare_chain,
    chain_edges,
    cnn_cost_formula,
    generate_hurkens,
    lemma_preference,
    lemma_route,
    lemma_route_cost_formula,
    lemma_visit_cost_formula,
    optimal_cost_formula,
    ratio_lower_bound,
)
from cctp.tsp import minimum_spanning_tree, offline_optimum


@pytest.mark.parametrize("p", range(1, 7))
def test_structure(p):
    h = generate_hurkens(p)
    n = 2 ** (p + 1)
    assert h.n == n
    assert len(chain_edges(p)) == 3 * (2**p - 1)
    assert len(h.unblocked) == 3 * (2**p - 1) + 1
    assert h.scenario.k == comb(n, 2) - len(h.unblocked)
    assert h.scenario.source == h.landmarks["l"]
    inst = h.scenario.instance
    u = h.landmarks["u"]
    for x in range(n - 1):
        assert inst.cost(u, x) == 1
        assert h.scenario.is_blocked(u, x) == (x != h.landmarks["l"])
    assert validate_metric(inst) == []
    assert is_connected(n, h.scenario.blocked)


def test_counts_p1_p3():
    h1, h3 = generate_hurkens(1), generate_hurkens(3)
    assert (h1.n, len(h1.unblocked), h1.scenario.k) == (4, 4, 2)
    assert (h3.n, len(h3.unblocked), h3.scenario.k) == (16, 22, 98)


def test_blocked_density():
    ratios = {p: generate_hurkens(p).scenario.k / generate_hurkens(p).n ** 2 for p in range(2, 7)}
    assert ratios[2] == 18 / 64
    assert all(0.3 <= ratios[p] <= 0.5 for p in range(3, 7))
    assert all(ratios[p] < ratios[p + 1] for p in range(2, 6))


def test_landmarks_p3():
    h = generate_hurkens(3)
    assert h.landmarks == {"l": 0, "r": 7, "m": 11, "u": 15}
    assert h.injected_tour[:3] == [0, 15, 7]
    assert sorted(h.injected_tour) == list(range(16))


def test_out_of_range():
    with pytest.raises(ValueError):
        generate_hurkens(0)
    with pytest.raises(ValueError):
        generate_hurkens(7)


def test_formulas():
    assert [optimal_cost_formula(p) for p in (1, 3)] == [5, 23]
    assert [lemma_route_cost_formula(p) for p in (1, 3, 4)] == [3, 26, 62]
    assert lemma_visit_cost_formula(1) == 2
    assert ratio_lower_bound(3) == Fraction(28, 23)
    assert ratio_lower_bound(1) == 1
    assert all(ratio_lower_bound(p + 1) > ratio_lower_bound(p) for p in range(1, 6))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_optimum_matches_held_karp(p):
    assert offline_optimum(generate_hurkens(p).scenario).cost == optimal_cost_formula(p)


@pytest.mark.parametrize("p", range(1, 6))
def test_mst_weight(p):
    h = generate_hurkens(p)
    assert minimum_spanning_tree(h.scenario.instance).weight == 2 ** (p + 1) - 1


def test_lemma_route_p1_p2():
    assert lemma_route(1) == [0, 1, 2]
    # left triangle b0 b1 a0, right triangle b2 b3 a2, then apex a1
    assert lemma_route(2) == [0, 1, 4, 2, 3, 6, 5]


@pytest.mark.parametrize("p", range(1, 6))
def test_nn_on_bare_chain(p):
    sc = bare_chain(p)
    env = Environment(sc)
    g = CompressedGraph(list(range(sc.n)), 0)
    out = nn_explore(env, g, lemma_preference(p))
    assert out.explore_cost == lemma_visit_cost_formula(p)
    assert out.return_cost == 2 ** (p - 1)
    first_visits = list(dict.fromkeys(out.g_walk))
    assert first_visits == lemma_route(p)
    if p == 1:
        assert out.g_walk == [0, 1, 2, 0]


@pytest.mark.parametrize("p", range(1, 6))
def test_cnn_on_hurkens(p):
    h = generate_hurkens(p)
    r = compress_and_explore(Environment(h.scenario), inject_tour(h.injected_tour), lemma_preference(p))
    assert r.total_cost == cnn_cost_formula(p)
    assert r.shortcut_cost == 2
    assert r.explore_cost + r.return_cost == lemma_route_cost_formula(p)


def test_cnn_with_christofides_is_informative_only():
    # not normative: our tie-breaking need not reproduce the path-MST tour
    h = generate_hurkens(2)
    r = compress_and_explore(Environment(h.scenario))
    assert set(r.walk.vertices) == set(range(h.n))
