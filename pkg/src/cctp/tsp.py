"""Offline TSP machinery: MST, double tree, Christofides, Held-Karp, closures.

All functions accept either a :class:`MetricInstance` or a raw square cost
table.  Ties are broken lexicographically on (cost, min endpoint, max endpoint)
so that every output is reproducible.
"""
from __future__ import annotations

import heapq
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .core import CCTPError, Edge, MetricInstance, Scenario, UnionFind, edge, floyd_warshall

log = logging.getLogger(__name__)

MATCHING_DP_LIMIT = 20
HK_LIMIT = 18


class TourSizeError(CCTPError, ValueError):
    """Instance too large for an exponential-time routine."""


@dataclass
class SpanningTree:
    edges: list[Edge]
    weight: float


@dataclass
class TspTour:
    """Hamiltonian cycle given as a vertex order; the closing edge is implicit."""

    order: list[int]
    cost: float
    method: str = ""

    @property
    def source(self) -> int:
        return self.order[0]

    def closed(self) -> list[int]:
        return self.order + [self.order[0]] if len(self.order) > 1 else list(self.order)


AlgoTSP = Callable[[np.ndarray, int], TspTour]


def _costs(x) -> np.ndarray:
    return x.costs if isinstance(x, MetricInstance) else np.asarray(x, dtype=float)


def tour_cost(costs, order: Sequence[int]) -> float:
    c = _costs(costs)
    if len(order) < 2:
        return 0.0
    total = Fraction(0)
    for a, b in zip(order, list(order[1:]) + [order[0]]):
        total += Fraction(float(c[a, b]))
    return float(total)


def check_tour(order: Sequence[int], n: int, source: int) -> None:
    if len(order) != n or sorted(order) != list(range(n)):
        raise ValueError(f"tour is not a permutation of 0..{n - 1}: {list(order)}")
    if order[0] != source:
        raise ValueError(f"tour starts at {order[0]}, expected source {source}")


# ---------------------------------------------------------------------------


def minimum_spanning_tree(costs) -> SpanningTree:
    """Kruskal on the complete graph with lexicographic tie-breaking."""
    c = _costs(costs)
    n = c.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = c[iu, ju]
    order = np.lexsort((ju, iu, w))
    uf = UnionFind(n)
    tree = []
    for idx in order:
        i, j = int(iu[idx]), int(ju[idx])
        if uf.union(i, j):
            tree.append((i, j))
            if len(tree) == n - 1:
                break
    weight = float(sum(Fraction(float(c[i, j])) for i, j in tree))
    return SpanningTree(tree, weight)


def _preorder(n: int, tree_edges, root: int) -> list[int]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in tree_edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    out = []
    stack = [root]
    while stack:
        v = stack.pop()
        if seen[v]:
            continue
        seen[v] = True
        out.append(v)
        stack.extend(sorted((x for x in adj[v] if not seen[x]), reverse=True))
    return out


def double_tree_tour(costs, source: int = 0) -> TspTour:
    """Preorder walk of the MST rooted at ``source`` (2-approximation)."""
    c = _costs(costs)
    mst = minimum_spanning_tree(c)
    order = _preorder(c.shape[0], mst.edges, source)
    return TspTour(order, tour_cost(c, order), "double-tree")


def min_weight_perfect_matching(costs, vertices: Sequence[int]) -> list[Edge]:
    """Exact minimum-weight perfect matching on an even vertex set by bitmask DP.

    The lowest unmatched vertex is always paired first, so each subset is
    solved once.  Work is vectorized over all subsets of equal size.
    """
    c = _costs(costs)
    vs = list(vertices)
    m = len(vs)
    if m % 2:
        raise ValueError("perfect matching needs an even number of vertices")
    if m == 0:
        return []
    w = c[np.ix_(vs, vs)]
    full = 1 << m
    masks = np.arange(full, dtype=np.int64)
    pop = np.zeros(full, dtype=np.int64)
    for b in range(m):
        pop += (masks >> b) & 1
    low = np.zeros(full, dtype=np.int64)
    for b in reversed(range(m)):
        low[(masks >> b) & 1 == 1] = b
    dp = np.full(full, np.inf)
    partner = np.full(full, -1, dtype=np.int64)
    dp[0] = 0.0
    for size in range(2, m + 1, 2):
        layer = masks[pop == size]
        i = low[layer]
        best = np.full(layer.shape, np.inf)
        arg = np.full(layer.shape, -1, dtype=np.int64)
        for j in range(m):
            ok = ((layer >> j) & 1 == 1) & (i != j)
            rest = layer ^ (np.int64(1) << i) ^ (np.int64(1) << j)
            cand = np.where(ok, dp[np.where(ok, rest, 0)] + w[i, j], np.inf)
            better = cand < best
            best[better] = cand[better]
            arg[better] = j
        dp[layer] = best
        partner[layer] = arg
    pairs = []
    mask = full - 1
    while mask:
        i = int(low[mask])
        j = int(partner[mask])
        pairs.append(edge(vs[i], vs[j]))
        mask ^= (1 << i) | (1 << j)
    return sorted(pairs)


def _euler_circuit(n: int, multi_edges, start: int) -> list[int]:
    """Hierholzer from ``start``, always taking the lowest-index neighbour."""
    adj = [Counter() for _ in range(n)]
    for a, b in multi_edges:
        adj[a][b] += 1
        adj[b][a] += 1
    stack = [start]
    circuit = []
    while stack:
        v = stack[-1]
        if adj[v]:
            x = min(adj[v])
            for a, b in ((v, x), (x, v)):
                adj[a][b] -= 1
                if not adj[a][b]:
                    del adj[a][b]
            stack.append(x)
        else:
            circuit.append(stack.pop())
    circuit.reverse()
    return circuit


class MatchingTooLarge(TourSizeError):
    pass


def christofides_tour(
    costs,
    source: int = 0,
    matching_dp_limit: int = MATCHING_DP_LIMIT,
    fallback: bool = True,
) -> TspTour:
    """Christofides' 3/2-approximation with an exact (DP) matching step.

    With more than ``matching_dp_limit`` odd-degree vertices the DP is
    infeasible; the double-tree tour is returned instead (``method`` says so
    and a warning is logged) unless ``fallback`` is False.
    """
    c = _costs(costs)
    n = c.shape[0]
    if n <= 2:
        order = list(range(n))
        order = order[order.index(source):] + order[: order.index(source)]
        return TspTour(order, tour_cost(c, order), "christofides")
    mst = minimum_spanning_tree(c)
    deg = Counter()
    for i, j in mst.edges:
        deg[i] += 1
        deg[j] += 1
    odd = sorted(v for v in range(n) if deg[v] % 2)
    if len(odd) > matching_dp_limit:
        if not fallback:
            raise MatchingTooLarge(f"{len(odd)} odd-degree vertices exceed matching limit {matching_dp_limit}")
        log.warning("christofides: %d odd vertices > %d, using double-tree tour", len(odd), matching_dp_limit)
        tour = double_tree_tour(c, source)
        tour.method = "double-tree(fallback)"
        return tour
    matching = min_weight_perfect_matching(c, odd)
    circuit = _euler_circuit(n, mst.edges + matching, source)
    seen = set()
    order = []
    for v in circuit:
        if v not in seen:
            seen.add(v)
            order.append(v)
    return TspTour(order, tour_cost(c, order), "christofides")


def held_karp_optimal(costs, start: int = 0, hk_limit: int = HK_LIMIT) -> TspTour:
    """Exact optimal Hamiltonian cycle through all vertices of ``costs``."""
    c = _costs(costs)
    m = c.shape[0]
    if m > hk_limit:
        raise TourSizeError(f"Held-Karp refused: {m} vertices exceed limit {hk_limit}")
    if m == 1:
        return TspTour([start], 0.0, "held-karp")
    others = [v for v in range(m) if v != start]
    r = len(others)
    d = c[np.ix_(others, others)]
    full = 1 << r
    masks = np.arange(full, dtype=np.int64)
    pop = np.zeros(full, dtype=np.int64)
    for b in range(r):
        pop += (masks >> b) & 1
    dp = np.full((full, r), np.inf)
    parent = np.full((full, r), -1, dtype=np.int8)
    for j in range(r):
        dp[1 << j, j] = c[start, others[j]]
    for size in range(2, r + 1):
        layer = masks[pop == size]
        for j in range(r):
            sub = layer[(layer >> j) & 1 == 1]
            prev = sub ^ (1 << j)
            cand = dp[prev] + d[:, j]
            arg = np.argmin(cand, axis=1)
            dp[sub, j] = cand[np.arange(len(sub)), arg]
            parent[sub, j] = arg
    closing = dp[full - 1] + c[others, start]
    last = int(np.argmin(closing))
    rev = []
    mask = full - 1
    while last >= 0:
        rev.append(others[last])
        nxt = int(parent[mask, last])
        mask ^= 1 << last
        last = nxt
    order = [start] + rev[::-1]
    return TspTour(order, tour_cost(c, order), "held-karp")


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------


def dijkstra(adj: dict[int, list[tuple[int, float]]], src: int) -> tuple[dict[int, float], dict[int, Optional[int]]]:
    """Textbook Dijkstra; ties keep the first-found predecessor."""
    dist = {src: 0.0}
    pred: dict[int, Optional[int]] = {src: None}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for x, w in adj.get(v, ()):
            nd = d + w
            if x not in dist or nd < dist[x]:
                dist[x] = nd
                pred[x] = v
                heapq.heappush(heap, (nd, x))
    return dist, pred


def path_to(pred: dict[int, Optional[int]], target: int) -> list[int]:
    out = [target]
    while pred[out[-1]] is not None:
        out.append(pred[out[-1]])
    return out[::-1]


def metric_closure(scenario: Scenario) -> np.ndarray:
    """Shortest-path distances between all pairs using only unblocked edges."""
    w = np.array(scenario.instance.costs, dtype=float)
    for i, j in scenario.blocked:
        w[i, j] = w[j, i] = np.inf
    return floyd_warshall(w)


def offline_optimum(scenario: Scenario, hk_limit: int = HK_LIMIT) -> TspTour:
    """Optimal closed walk covering all vertices when every block is known."""
    return held_karp_optimal(metric_closure(scenario), scenario.source, hk_limit)
