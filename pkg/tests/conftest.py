import math

import numpy as np
import pytest

from wgverify.graph import IndependenceCover, WeightedGraph

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def random_instance(rng, n, m, density=0.7, angles=None):
    """Random weighted graph together with a valid m-part cover.

    Colors are assigned first (every color used), then edges are drawn only
    between differently colored vertices.
    """
    colors = list(range(m)) + [int(c) for c in rng.integers(0, m, size=n - m)]
    rng.shuffle(colors)
    edges = {}
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            if colors[j - 1] != colors[k - 1] and rng.random() < density:
                if angles is None:
                    theta = float(rng.uniform(-2 * math.pi, 2 * math.pi))
                else:
                    theta = float(angles[int(rng.integers(len(angles)))])
                edges[(j, k)] = theta if theta != 0 else 0.5
    parts = [[v for v in range(1, n + 1) if colors[v - 1] == c] for c in range(m)]
    return WeightedGraph(n, edges), IndependenceCover(parts)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def path3():
    return WeightedGraph(3, {(1, 2): math.pi / 4, (2, 3): 3 * math.pi / 8})


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}")
