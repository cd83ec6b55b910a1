import math

import numpy as np
import pytest

from cctp.core import MetricInstance, Scenario, edge, generate_random_scenario

ACCEPTANCE_LINES: list[str] = []

# Blocked edges (1-based labels) of the 16-vertex circle example.  The forward
# ShortCut path v1 v2 v4 v5 v9 v10 v11 v14 v16 and the return by retracing are
# forced by these; {v1, v3} is blocked so that the v1-v3 path edge detours via v4.
CIRCLE_BLOCKED = [
    (2, 3), (5, 6), (5, 7), (5, 8), (11, 12), (11, 13), (14, 15), (16, 1),
    (1, 10), (1, 3), (9, 16), (2, 14),
]


def circle_scenario() -> Scenario:
    angles = [2 * math.pi * k / 16 for k in range(16)]
    pts = np.array([[math.cos(a), math.sin(a)] for a in angles])
    blocked = frozenset(edge(a - 1, b - 1) for a, b in CIRCLE_BLOCKED)
    return Scenario(MetricInstance.from_points(pts), blocked, name="circle16")


def v(k: int) -> int:
    """1-based example label -> vertex index."""
    return k - 1


def random_suite(count: int = 1000):
    """Seeded scenarios with 4 <= n <= 12 and 0 <= k <= 8, both geometries."""
    out = []
    for seed in range(count):
        n = 4 + seed % 9
        kmax = min(8, n * (n - 1) // 2 - (n - 1))
        k = (seed // 9) % (kmax + 1)
        geometry = "euclidean" if seed % 3 else "random-metric-closure"
        out.append(generate_random_scenario(n, k, seed, geometry))
    return out


@pytest.fixture(scope="session")
def suite():
    return random_suite()


@pytest.fixture
def circle16():
    return circle_scenario()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
