"""The triangle-chain family G_p^+ on which CNN is Omega(log k)-competitive.

Vertex labels are canonical: lower row b_0..b_{2^p-1} first (b_0 = l_p is the
source, b_{2^p-1} = r_p), then the upper row a_0..a_{2^p-2} (a_t is the apex of
the triangle on b_t, b_{t+1}), then the extra vertex u.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Edge, MetricInstance, Scenario, all_edges, edge

P_MAX = 6


@dataclass
class HurkensChain:
    p: int
    scenario: Scenario
    landmarks: dict[str, int]
    injected_tour: list[int]
    unblocked: list[Edge]

    @property
    def n(self) -> int:
        return self.scenario.n

    def lower(self, i: int) -> int:
        return i

    def upper(self, t: int) -> int:
        return 2**self.p + t

    def landmarks_json(self) -> dict:
        return {**self.landmarks, "p": self.p, "injected_tour": list(self.injected_tour)}


def chain_edges(p: int) -> list[Edge]:
    """The 3(2^p - 1) unit edges of the bare chain G_p."""
    lo = 2**p
    out = []
    for t in range(lo - 1):
        a = lo + t
        out += [edge(t, t + 1), edge(t, a), edge(t + 1, a)]
    return sorted(out)


def generate_hurkens(p: int) -> HurkensChain:
    if not 1 <= p <= P_MAX:
        raise ValueError(f"p must be in 1..{P_MAX}, got {p}")
    lo = 2**p
    n = 2 * lo
    u = n - 1
    l, r = 0, lo - 1
    m = lo + (lo // 2 - 1)
    unblocked = chain_edges(p) + [edge(l, u)]
    costs = np.full((n, n), 2.0)
    costs[u, :] = costs[:, u] = 1.0
    for i, j in unblocked:
        costs[i, j] = costs[j, i] = 1.0
    np.fill_diagonal(costs, 0.0)
    open_set = set(unblocked)
    blocked = frozenset(e for e in all_edges(n) if e not in open_set)

    # path-MST u - l - a_0 - b_1 - a_1 - ... - a_last - r closed by the u-r matching edge,
    # walked from l through u and r first
    zigzag = [l]
    for t in range(lo - 1):
        zigzag += [lo + t, t + 1]
    tour = [l, u] + zigzag[:0:-1]

    scenario = Scenario(
        MetricInstance(costs, source=l),
        blocked,
        name=f"hurkens-p{p}",
    )
    landmarks = {"l": l, "r": r, "m": m, "u": u}
    scenario.meta["landmarks"] = {**landmarks, "p": p, "injected_tour": tour}
    return HurkensChain(p, scenario, landmarks, tour, sorted(unblocked))


def bare_chain(p: int) -> Scenario:
    """G_p alone as a complete instance: chain edges cost 1, every other pair 2 and blocked."""
    if not 1 <= p <= P_MAX:
        raise ValueError(f"p must be in 1..{P_MAX}, got {p}")
    n = 2 ** (p + 1) - 1
    open_edges = chain_edges(p)
    costs = np.full((n, n), 2.0)
    for i, j in open_edges:
        costs[i, j] = costs[j, i] = 1.0
    np.fill_diagonal(costs, 0.0)
    keep = set(open_edges)
    blocked = frozenset(e for e in all_edges(n) if e not in keep)
    return Scenario(MetricInstance(costs, source=0), blocked, name=f"chain-p{p}")


def lemma_route(p: int, first: int = 0) -> list[int]:
    """Visiting order of the inductive NN route on G_p, from l_p to m_p.

    For p = 1 it is l -> r -> m; otherwise the route through the left copy of
    G_{p-1}, then the right copy, then the joining apex m_p.  ``first`` is the
    lower-row index of the chain's leftmost vertex.
    """
    return _route(p, p, first)


def _route(p_total: int, q: int, first: int) -> list[int]:
    upper0 = 2**p_total
    if q == 1:
        return [first, first + 1, upper0 + first]
    half = 2 ** (q - 1)
    apex = upper0 + first + half - 1
    return _route(p_total, q - 1, first) + _route(p_total, q - 1, first + half) + [apex]


def lemma_preference(p: int):
    """Tie key that makes NN follow :func:`lemma_route` on G_p.

    Among equally near vertices the one earliest on the route wins; ``u``
    and anything else ranks last.
    """
    rank = {v: i for i, v in enumerate(lemma_route(p))}
    last = len(rank)

    def key(v: int):
        return (rank.get(v, last), v)

    return key


def optimal_cost_formula(p: int) -> int:
    return 2 + 3 * (2**p - 1)


def lemma_route_cost_formula(p: int) -> int:
    return (p + 4) * 2 ** (p - 1) - 2


def lemma_visit_cost_formula(p: int) -> int:
    return (p + 3) * 2 ** (p - 1) - 2


def cnn_cost_formula(p: int) -> int:
    return (p + 4) * 2 ** (p - 1)


def ratio_lower_bound(p: int) -> Fraction:
    """Exact CNN/OPT ratio on G_p^+; always at least (p + 4) / 6."""
    ratio = Fraction(cnn_cost_formula(p), optimal_cost_formula(p))
    assert ratio >= Fraction(p + 4, 6)
    return ratio
