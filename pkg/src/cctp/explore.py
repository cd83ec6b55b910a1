"""CompressAndExplore: ShortCut along a TSP tour, compress, then explore by NN.

Every physical step goes through :meth:`Environment.move`, so the algorithms
here can only act on edge states that the traveller has actually seen.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import CCTPError, Edge, EdgeState, Environment, MetricInstance, Scenario, Walk, edge, floyd_warshall
from .tsp import (
    AlgoTSP,
    TspTour,
    check_tour,
    christofides_tour,
    dijkstra,
    double_tree_tour,
    held_karp_optimal,
    path_to,
    tour_cost,
)

log = logging.getLogger(__name__)

TiePolicy = Callable[[int], object]


class ExplorationError(CCTPError, RuntimeError):
    """Unvisited vertices remain but none is reachable through known edges."""


def lowest_index(v: int) -> int:
    return v


@dataclass
class ShortCutResult:
    known_blocked: set[Edge]
    u_s: set[int]
    walk: Walk
    tour: TspTour
    retraced: bool = False

    @property
    def cost(self) -> float:
        return self.walk.cost


@dataclass
class CompressedGraph:
    """Multigraph on U_s: unknown-state direct edges plus known shortest-path edges.

    ``path_edges`` maps a canonical pair (x, y), x < y, to ``(cost, expansion)``
    where the expansion is the vertex sequence from x to y in the original graph.
    Direct edges are implicitly every pair of ``vertices``.
    """

    vertices: list[int]
    source: int
    path_edges: dict[Edge, tuple[float, list[int]]] = field(default_factory=dict)

    @property
    def direct_edges(self) -> list[Edge]:
        vs = sorted(self.vertices)
        return [(a, b) for i, a in enumerate(vs) for b in vs[i + 1:]]

    def expansion(self, x: int, y: int) -> list[int]:
        path = self.path_edges[edge(x, y)][1]
        return list(path) if path[0] == x else path[::-1]


@dataclass
class ExplorationResult:
    g_walk: list[int]
    walk: Walk
    explore_cost: float
    return_cost: float


@dataclass
class RunResult:
    algorithm: str
    walk: Walk
    tour: TspTour
    shortcut_cost: float
    explore_cost: float
    return_cost: float
    shortcut: Optional[ShortCutResult] = None
    compressed: Optional[CompressedGraph] = None
    env: Optional[Environment] = None
    rounds: int = 0

    @property
    def total_cost(self) -> float:
        return self.walk.cost


# ---------------------------------------------------------------------------
# ShortCut
# ---------------------------------------------------------------------------


def _shortcut_pass(env: Environment, order: Sequence[int]) -> tuple[list[int], list[int]]:
    """Try each vertex of ``order`` in turn by its direct edge; skip it if blocked.

    Returns the forward path actually walked and the skipped vertices.
    """
    view = env.view
    forward = [view.position]
    skipped = []
    for v in order:
        if v == view.position:
            continue
        if view.state(view.position, v) is EdgeState.OPEN:
            env.move(v)
            forward.append(v)
        else:
            skipped.append(v)
    return forward, skipped


def shortcut(env: Environment, tour: TspTour) -> ShortCutResult:
    """Follow ``tour`` from the source, skipping vertices behind blocked edges.

    If the last reached vertex cannot go straight back to the source the
    traveller retraces the forward path.
    """
    s = env.source
    view = env.view
    if view.position != s or len(view.visited) != 1:
        raise CCTPError("shortcut needs a fresh environment at the source")
    check_tour(tour.order, env.n, s)
    env.phase = "shortcut"
    forward, skipped = _shortcut_pass(env, tour.order[1:])
    retraced = False
    if view.position != s:
        if view.state(view.position, s) is EdgeState.OPEN:
            env.move(s)
        else:
            retraced = True
            env.follow(forward[::-1])
    return ShortCutResult(
        known_blocked=set(view.revealed_blocked),
        u_s={s, *skipped},
        walk=Walk(list(view.walk_log.vertices), view.walk_log.cost),
        tour=tour,
        retraced=retraced,
    )


# ---------------------------------------------------------------------------
# Compress
# ---------------------------------------------------------------------------


def known_graph(view, n: int, instance: MetricInstance) -> dict[int, list[tuple[int, float]]]:
    """Adjacency of all edges currently known to be unblocked."""
    adj: dict[int, list[tuple[int, float]]] = {v: [] for v in range(n)}
    for i, j in sorted(view.revealed_unblocked):
        w = instance.cost(i, j)
        adj[i].append((j, w))
        adj[j].append((i, w))
    return adj


def compress(result: ShortCutResult, env: Environment) -> CompressedGraph:
    """Build G' over U_s with one shortest known-unblocked path edge per pair.

    H consists of the edges revealed unblocked, i.e. edges with a visited
    endpoint whose state is known to be open.  No travel happens here.
    """
    env.phase = "compress"
    u_s = sorted(result.u_s)
    h = known_graph(env.view, env.n, env.instance)
    g = CompressedGraph(u_s, env.source)
    for a_idx, x in enumerate(u_s):
        dist, pred = dijkstra(h, x)
        for y in u_s[a_idx + 1:]:
            if y in dist:
                g.path_edges[(x, y)] = (dist[y], path_to(pred, y))
    return g


# ---------------------------------------------------------------------------
# Nearest Neighbour on G'
# ---------------------------------------------------------------------------


def _g_adjacency(g: CompressedGraph, env: Environment) -> dict[int, list[tuple[int, float, str]]]:
    """Usable G' edges right now: path edges always, direct edges once seen open.

    Of two parallel edges the cheaper wins; on a tie the direct edge wins.
    """
    view = env.view
    adj: dict[int, list[tuple[int, float, str]]] = {v: [] for v in g.vertices}
    for x, y in g.direct_edges:
        options = []
        if view.state(x, y) is EdgeState.OPEN:
            options.append((env.instance.cost(x, y), 0, "direct"))
        if (x, y) in g.path_edges:
            options.append((g.path_edges[(x, y)][0], 1, "path"))
        if options:
            w, _, kind = min(options)
            adj[x].append((y, w, kind))
            adj[y].append((x, w, kind))
    return adj


def _g_route(adj, src: int):
    plain = {v: [(x, w) for x, w, _ in nbrs] for v, nbrs in adj.items()}
    kinds = {(v, x): k for v, nbrs in adj.items() for x, _, k in nbrs}
    dist, pred = dijkstra(plain, src)
    return dist, pred, kinds


def _travel(env: Environment, g: CompressedGraph, hops: list[int], kinds) -> None:
    for a, b in zip(hops, hops[1:]):
        if kinds[(a, b)] == "direct":
            env.move(b, "direct")
        else:
            env.follow(g.expansion(a, b), "path-expansion")


def nn_explore(env: Environment, g: CompressedGraph, tie_policy: TiePolicy = lowest_index) -> ExplorationResult:
    """Visit every vertex of G' by repeatedly going to the nearest unvisited one.

    Distances use only G' edges whose traversability is known.  Equal
    distances are broken by ``tie_policy`` (smaller key first).  Finally the
    traveller returns to the source by the cheapest known route.
    """
    s = g.source
    if env.view.position != s:
        raise CCTPError("exploration must start at the source")
    start_cost = env.exact_total
    start_len = len(env.view.walk_log.vertices) - 1
    members = set(g.vertices)
    g_walk = [s]
    env.phase = "explore"
    while True:
        unvisited = members - env.view.visited
        if not unvisited:
            break
        here = env.view.position
        dist, pred, kinds = _g_route(_g_adjacency(g, env), here)
        reachable = [v for v in unvisited if v in dist]
        if not reachable:
            raise ExplorationError(f"{len(unvisited)} G' vertices unreachable from {here}")
        target = min(reachable, key=lambda v: (dist[v], tie_policy(v)))
        hops = path_to(pred, target)
        _travel(env, g, hops, kinds)
        g_walk.extend(hops[1:])
    explore_cost = float(env.exact_total - start_cost)

    env.phase = "return"
    mid = env.exact_total
    here = env.view.position
    if here != s:
        dist, pred, kinds = _g_route(_g_adjacency(g, env), here)
        if s not in dist:
            raise ExplorationError(f"no known route back to source from {here}")
        hops = path_to(pred, s)
        _travel(env, g, hops, kinds)
        g_walk.extend(hops[1:])
    return_cost = float(env.exact_total - mid)
    walk = Walk(env.view.walk_log.vertices[start_len:], float(env.exact_total - start_cost))
    return ExplorationResult(g_walk, walk, explore_cost, return_cost)


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def inject_tour(order: Sequence[int]) -> AlgoTSP:
    """An AlgoTSP that ignores the costs and returns ``order`` verbatim."""
    fixed = [int(v) for v in order]
    if sorted(fixed) != list(range(len(fixed))):
        raise ValueError(f"injected tour is not a permutation: {fixed}")

    def algo(costs, source: int) -> TspTour:
        check_tour(fixed, len(fixed), source)
        return TspTour(list(fixed), tour_cost(costs, fixed), "injected")

    return algo


def christofides(costs, source: int) -> TspTour:
    return christofides_tour(costs, source)


def double_tree(costs, source: int) -> TspTour:
    return double_tree_tour(costs, source)


def compress_and_explore(
    env: Environment,
    algo_tsp: AlgoTSP = christofides,
    tie_policy: TiePolicy = lowest_index,
    name: str = "cnn",
) -> RunResult:
    """ShortCut -> Compress -> NN exploration, returning the full walk in G."""
    if len(env.view.visited) != 1 or env.view.position != env.source:
        raise CCTPError("compress_and_explore needs a fresh environment")
    tour = algo_tsp(env.instance.costs, env.source)
    sc = shortcut(env, tour)
    g = compress(sc, env)
    explored = nn_explore(env, g, tie_policy)
    walk = Walk(list(env.view.walk_log.vertices), env.view.walk_log.cost)
    return RunResult(
        algorithm=name,
        walk=walk,
        tour=tour,
        shortcut_cost=sc.cost,
        explore_cost=explored.explore_cost,
        return_cost=explored.return_cost,
        shortcut=sc,
        compressed=g,
        env=env,
    )


def _optimistic_closure(env: Environment) -> np.ndarray:
    """Shortest paths treating every edge not known to be blocked as usable."""
    w = np.array(env.instance.costs, dtype=float)
    for i, j in env.view.revealed_blocked:
        w[i, j] = w[j, i] = np.inf
    return floyd_warshall(w)


def repeated_shortcut_baseline(env: Environment, algo_tsp: AlgoTSP = christofides, name: str = "repeated-shortcut") -> RunResult:
    """Simplified cyclic-routing style baseline: repeated ShortCut rounds.

    Round 1 is a plain ShortCut on the full tour.  Each later round starts at
    the source, recomputes a tour over the remaining vertices on the closure of
    not-known-blocked distances, and walks it (reversed on even rounds) using
    direct edges only.  If a round reaches nothing it moves to the nearest
    vertex reachable through known edges, so every round makes progress.  The
    traveller goes home between rounds by the cheapest known route.
    """
    s = env.source
    tour = algo_tsp(env.instance.costs, s)
    sc = shortcut(env, tour)
    rounds = 1
    view = env.view
    env.phase = "explore"
    explore_start = env.exact_total
    while len(view.visited) < env.n:
        rounds += 1
        remaining = sorted(set(range(env.n)) - view.visited)
        sub = [s] + remaining
        closure = _optimistic_closure(env)
        local = algo_tsp(closure[np.ix_(sub, sub)], 0)
        order = [sub[i] for i in local.order[1:]]
        if rounds % 2 == 0:
            order.reverse()
        before = len(view.visited)
        _shortcut_pass(env, order)
        if len(view.visited) == before:
            dist, pred = dijkstra(known_graph(view, env.n, env.instance), view.position)
            reach = [v for v in remaining if v in dist]
            if not reach:
                raise ExplorationError("no unvisited vertex reachable through known edges")
            target = min(reach, key=lambda v: (dist[v], v))
            env.follow(path_to(pred, target))
        _go_home(env)
    explore_cost = float(env.exact_total - explore_start)
    walk = Walk(list(view.walk_log.vertices), view.walk_log.cost)
    return RunResult(name, walk, tour, sc.cost, explore_cost, 0.0, shortcut=sc, env=env, rounds=rounds)


def _go_home(env: Environment) -> None:
    view = env.view
    if view.position == env.source:
        return
    if view.state(view.position, env.source) is EdgeState.OPEN:
        env.move(env.source)
        return
    dist, pred = dijkstra(known_graph(view, env.n, env.instance), view.position)
    env.follow(path_to(pred, env.source))


ALGORITHMS = {
    "cnn": lambda env, tsp=None, tie=lowest_index: compress_and_explore(env, tsp or christofides, tie, "cnn"),
    "double-tree-nn": lambda env, tsp=None, tie=lowest_index: compress_and_explore(env, tsp or double_tree, tie, "double-tree-nn"),
    "repeated-shortcut": lambda env, tsp=None, tie=lowest_index: repeated_shortcut_baseline(env, tsp or christofides),
}


def run_algorithm(scenario: Scenario, algo: str = "cnn", tsp: Optional[AlgoTSP] = None, tie: TiePolicy = lowest_index) -> RunResult:
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(ALGORITHMS)}")
    return ALGORITHMS[algo](Environment(scenario), tsp, tie)


def compressed_optimum(g: CompressedGraph, scenario: Scenario) -> float:
    """Optimal tour cost over G' using only edges that are truly traversable.

    Offline quantity for instrumentation: direct edges count only when
    actually unblocked, path edges always, and multi-hop routes are allowed.
    """
    vs = g.vertices
    m = len(vs)
    w = np.full((m, m), np.inf)
    for a in range(m):
        for b in range(a + 1, m):
            x, y = vs[a], vs[b]
            best = np.inf
            if not scenario.is_blocked(x, y):
                best = scenario.instance.cost(x, y)
            if (x, y) in g.path_edges:
                best = min(best, g.path_edges[(x, y)][0])
            w[a, b] = w[b, a] = best
    closure = floyd_warshall(w)
    return held_karp_optimal(closure, vs.index(g.source)).cost
