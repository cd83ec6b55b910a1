"""Instances, scenarios and the online environment that hides blocked edges.

The environment owns the ground truth (which edges are blocked).  Algorithms
only ever get a :class:`TravellerView` plus the ability to :meth:`Environment.move`
along an edge whose state they already know to be unblocked.
"""
from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

FORMAT = "cctp-v1"
EPS_METRIC = 1e-9
MAX_REJECTIONS = 10_000

Edge = tuple[int, int]


class CCTPError(Exception):
    """Base class for errors raised by this package."""


class ScenarioError(CCTPError, ValueError):
    """Malformed instance or scenario (bad costs, disconnected, too many blocks)."""


class ContractViolation(CCTPError, RuntimeError):
    """An algorithm tried to use information or edges it is not entitled to."""


def edge(i: int, j: int) -> Edge:
    """Canonical encoding of the unordered pair {i, j} as (min, max)."""
    if i == j:
        raise ValueError(f"no self-loop edge at vertex {i}")
    return (i, j) if i < j else (j, i)


def all_edges(n: int) -> Iterator[Edge]:
    return itertools.combinations(range(n), 2)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True


def is_connected(n: int, blocked: Iterable[Edge]) -> bool:
    """True if the complete graph on n vertices minus `blocked` is connected."""
    blocked = set(blocked)
    uf = UnionFind(n)
    for e in all_edges(n):
        if e not in blocked and uf.union(*e) and uf.components == 1:
            return True
    return uf.components <= 1


@dataclass(frozen=True, eq=False)
class MetricInstance:
    """Complete weighted graph on ``n`` vertices with a designated source.

    ``costs`` is a symmetric ``n x n`` float array; the diagonal is ignored.
    ``points`` is kept only for serialization of Euclidean instances.
    """

    costs: np.ndarray
    source: int = 0
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.array(self.costs, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ScenarioError(f"cost table must be square, got shape {c.shape}")
        n = c.shape[0]
        if n < 1:
            raise ScenarioError("instance needs at least one vertex")
        if not 0 <= self.source < n:
            raise ScenarioError(f"source {self.source} out of range for n={n}")
        np.fill_diagonal(c, 0.0)
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ScenarioError("costs must be finite and non-negative")
        if not np.array_equal(c, c.T):
            raise ScenarioError("cost table is not symmetric")
        c.setflags(write=False)
        object.__setattr__(self, "costs", c)

    @property
    def n(self) -> int:
        return self.costs.shape[0]

    def cost(self, i: int, j: int) -> float:
        return float(self.costs[i, j])

    @classmethod
    def from_points(cls, points, source: int = 0) -> "MetricInstance":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        diff = pts[:, None, :] - pts[None, :, :]
        costs = np.sqrt((diff**2).sum(axis=2))
        # force exact symmetry; sqrt of the same sum is identical but be explicit
        costs = np.minimum(costs, costs.T)
        return cls(costs, source, pts)


@dataclass(frozen=True)
class Violation:
    i: int
    j: int
    k: int
    direct: float
    detour: float


def validate_metric(instance: MetricInstance | np.ndarray, eps: float = EPS_METRIC) -> list[Violation]:
    """Every triple with cost(i,k) > cost(i,j) + cost(j,k) beyond relative tolerance ``eps``.

    An empty list means the instance is metric.  With ``eps=0`` the comparison
    is exact in floating point.
    """
    c = instance.costs if isinstance(instance, MetricInstance) else np.asarray(instance, float)
    n = c.shape[0]
    report = []
    for j in range(n):
        detour = c[:, j][:, None] + c[j, :][None, :]
        bad = c > detour + eps * np.maximum(1.0, detour)
        np.fill_diagonal(bad, False)
        bad[j, :] = False
        bad[:, j] = False
        for i, k in zip(*np.nonzero(bad)):
            if i < k:
                report.append(Violation(int(i), j, int(k), float(c[i, k]), float(detour[i, k])))
    report.sort(key=lambda v: (v.i, v.k, v.j))
    return report


@dataclass(frozen=True, eq=False)
class Scenario:
    """A metric instance together with its hidden set of blocked edges."""

    instance: MetricInstance
    blocked: frozenset[Edge] = frozenset()
    k_bound: Optional[int] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.instance.n
        canon = set()
        for e in self.blocked:
            i, j = (int(x) for x in e)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ScenarioError(f"invalid blocked edge {e} for n={n}")
            canon.add(edge(i, j))
        object.__setattr__(self, "blocked", frozenset(canon))
        if self.k_bound is not None and len(canon) > self.k_bound:
            raise ScenarioError(f"{len(canon)} blocked edges exceed k_bound={self.k_bound}")
        if not is_connected(n, canon):
            raise ScenarioError("blocked edges disconnect the graph")

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def source(self) -> int:
        return self.instance.source

    @property
    def k(self) -> int:
        return len(self.blocked)

    def is_blocked(self, i: int, j: int) -> bool:
        return edge(i, j) in self.blocked


# ---------------------------------------------------------------------------
# online environment
# ---------------------------------------------------------------------------


class EdgeState(enum.Enum):
    UNKNOWN = "unknown"
    BLOCKED = "blocked"
    OPEN = "unblocked"


@dataclass
class Walk:
    """Vertex sequence in the original graph and its total cost."""

    vertices: list[int]
    cost: float = 0.0

    @classmethod
    def of(cls, vertices: Sequence[int], instance: MetricInstance) -> "Walk":
        vs = list(vertices)
        total = Fraction(0)
        for a, b in zip(vs, vs[1:]):
            if a == b:
                raise ValueError(f"walk repeats vertex {a} consecutively")
            total += Fraction(instance.cost(a, b))
        return cls(vs, float(total))

    def edges(self) -> Iterator[Edge]:
        for a, b in zip(self.vertices, self.vertices[1:]):
            yield edge(a, b)

    def __len__(self):
        return len(self.vertices)


@dataclass
class TravellerView:
    """Everything an online algorithm is allowed to know."""

    position: int
    visited: set[int]
    revealed_blocked: set[Edge]
    revealed_unblocked: set[Edge]
    walk_log: Walk

    @property
    def total_cost(self) -> float:
        return self.walk_log.cost

    def state(self, i: int, j: int) -> EdgeState:
        e = edge(i, j)
        if e in self.revealed_unblocked:
            return EdgeState.OPEN
        if e in self.revealed_blocked:
            return EdgeState.BLOCKED
        return EdgeState.UNKNOWN

    def known_open(self, i: int, j: int) -> bool:
        return edge(i, j) in self.revealed_unblocked


class Environment:
    """Single-run online environment for one scenario.

    The traveller starts at the source with the source's incident edges
    revealed.  ``phase`` is a free-form label stamped onto every trace record.
    """

    def __init__(self, scenario: Scenario):
        self._scenario = scenario
        self.instance = scenario.instance
        self.phase = "shortcut"
        self.trace: list[dict] = []
        self.phase_costs: dict[str, Fraction] = {}
        self._exact_total = Fraction(0)
        s = scenario.source
        self.view = TravellerView(s, set(), set(), set(), Walk([s], 0.0))
        self._reveal(s)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def source(self) -> int:
        return self.instance.source

    @property
    def exact_total(self) -> Fraction:
        return self._exact_total

    def _reveal(self, v: int) -> None:
        view = self.view
        if v in view.visited:
            return
        view.visited.add(v)
        for x in range(self.n):
            if x == v:
                continue
            e = edge(v, x)
            if e in view.revealed_blocked or e in view.revealed_unblocked:
                continue
            if e in self._scenario.blocked:
                view.revealed_blocked.add(e)
            else:
                view.revealed_unblocked.add(e)

    def move(self, to: int, edge_kind: str = "direct") -> TravellerView:
        view = self.view
        frm = view.position
        if not 0 <= to < self.n or to == frm:
            raise ContractViolation(f"invalid move {frm}->{to}")
        state = view.state(frm, to)
        if state is EdgeState.BLOCKED:
            raise ContractViolation(f"blocked-edge traversal {frm}->{to}")
        if state is EdgeState.UNKNOWN:
            raise ContractViolation(f"unrevealed-edge traversal {frm}->{to}")
        c = self.instance.cost(frm, to)
        self._exact_total += Fraction(c)
        self.phase_costs[self.phase] = self.phase_costs.get(self.phase, Fraction(0)) + Fraction(c)
        view.position = to
        view.walk_log.vertices.append(to)
        view.walk_log.cost = float(self._exact_total)
        self._reveal(to)
        self.trace.append(
            {
                "phase": self.phase,
                "from": frm,
                "to": to,
                "edge_kind": edge_kind,
                "cost": c,
                "cumulative_cost": view.walk_log.cost,
            }
        )
        return view

    def follow(self, vertices: Sequence[int], edge_kind: str = "direct") -> None:
        """Move along ``vertices``; the first entry must be the current position."""
        if vertices and vertices[0] != self.view.position:
            raise ContractViolation(f"route starts at {vertices[0]}, traveller at {self.view.position}")
        for v in vertices[1:]:
            self.move(v, edge_kind)

    def phase_cost(self, phase: str) -> float:
        return float(self.phase_costs.get(phase, 0))


def new_environment(scenario: Scenario) -> tuple[Environment, TravellerView]:
    env = Environment(scenario)
    return env, env.view


def replay(scenario: Scenario, vertices: Sequence[int]) -> Environment:
    """Re-run a walk from a fresh environment; raises on any illegal step."""
    env = Environment(scenario)
    env.follow(list(vertices))
    return env


# ---------------------------------------------------------------------------
# random scenarios
# ---------------------------------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator seeded with a 64-bit integer (numpy's ``default_rng``)."""
    return np.random.Generator(np.random.PCG64(seed))


def generate_random_scenario(
    n: int,
    k: int,
    seed: int,
    geometry: str = "euclidean",
    max_rejections: int = MAX_REJECTIONS,
) -> Scenario:
    """Seeded random scenario with exactly ``k`` blocked edges.

    ``euclidean`` puts n uniform points in the unit square.  ``random-metric-closure``
    draws uniform (0, 1] weights on all pairs and takes the shortest-path closure.
    Blocked sets are uniform k-subsets of the edges, rejection-sampled until the
    remaining graph is connected.
    """
    if n < 2 or k < 0:
        raise ScenarioError(f"need n >= 2 and k >= 0, got n={n}, k={k}")
    rng = make_rng(seed)
    if geometry == "euclidean":
        instance = MetricInstance.from_points(rng.random((n, 2)))
    elif geometry == "random-metric-closure":
        w = 1.0 - rng.random((n, n))
        w = np.triu(w, 1)
        w = w + w.T
        instance = MetricInstance(floyd_warshall(w))
    else:
        raise ScenarioError(f"unknown geometry {geometry!r}")

    edges = list(all_edges(n))
    if k > len(edges) - (n - 1):
        raise ScenarioError(f"cannot keep graph connected with {k} of {len(edges)} edges blocked")
    for _ in range(max_rejections):
        pick = rng.choice(len(edges), size=k, replace=False) if k else []
        blocked = frozenset(edges[i] for i in pick)
        if is_connected(n, blocked):
            return Scenario(
                instance,
                blocked,
                k_bound=k,
                name=f"random-n{n}-k{k}-s{seed}-{geometry}",
                meta={"seed": seed, "geometry": geometry},
            )
    raise ScenarioError(f"cannot keep graph connected: no connected {k}-subset after {max_rejections} draws")


def floyd_warshall(weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths, iterated to a floating-point fixed point.

    Iterating until nothing changes guarantees d[i,k] <= d[i,j] + d[j,k]
    holds exactly in floating point, not merely up to rounding.
    """
    d = np.array(weights, dtype=float)
    np.fill_diagonal(d, 0.0)
    while True:
        before = d.copy()
        for j in range(d.shape[0]):
            np.minimum(d, d[:, j, None] + d[None, j, :], out=d)
        if np.array_equal(before, d):
            return d


# ---------------------------------------------------------------------------
# cctp-v1 JSON
# ---------------------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    inst = scenario.instance
    out: dict = {"format": FORMAT, "n": inst.n, "source": inst.source}
    if inst.points is not None:
        out["points"] = [[float(x), float(y)] for x, y in inst.points]
    else:
        out["costs"] = [[float(inst.costs[i, j]) for j in range(i)] for i in range(inst.n)]
    out["blocked"] = [list(e) for e in sorted(scenario.blocked)]
    if scenario.k_bound is not None:
        out["k_bound"] = scenario.k_bound
    if scenario.name:
        out["name"] = scenario.name
    out.update(scenario.meta)
    return out


def scenario_from_dict(data: dict) -> Scenario:
    if data.get("format") != FORMAT:
        raise ScenarioError(f"unsupported format {data.get('format')!r}, expected {FORMAT!r}")
    try:
        n = int(data["n"])
        source = int(data.get("source", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario header: {exc}") from None
    has_points, has_costs = "points" in data, "costs" in data
    if has_points == has_costs:
        raise ScenarioError("exactly one of 'points' or 'costs' must be present")
    if has_points:
        pts = np.asarray(data["points"], dtype=float)
        if pts.shape != (n, 2):
            raise ScenarioError(f"points must have shape ({n}, 2), got {pts.shape}")
        instance = MetricInstance.from_points(pts, source)
    else:
        rows = data["costs"]
        if len(rows) != n or any(len(r) != i for i, r in enumerate(rows)):
            raise ScenarioError("costs must be lower-triangular: row i holds i entries")
        c = np.zeros((n, n))
        for i, row in enumerate(rows):
            for j, w in enumerate(row):
                c[i, j] = c[j, i] = float(w)
        instance = MetricInstance(c, source)
    known = {"format", "n", "source", "points", "costs", "blocked", "k_bound", "name"}
    meta = {key: val for key, val in data.items() if key not in known}
    return Scenario(
        instance,
        frozenset(tuple(e) for e in data.get("blocked", [])),
        k_bound=data.get("k_bound"),
        name=data.get("name", ""),
        meta=meta,
    )


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return scenario_from_dict(data)
