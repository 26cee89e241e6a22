import random
from fractions import Fraction

import pytest

from hyperpoisson.core import Hypergraph, overlap_tree


def random_instance(rng, nmax=10, emax=8, kmin=2, kmax=5):
    """Connected hypergraph with dyadic weights and a dyadic zero-sum demand."""
    while True:
        n = rng.randint(2, nmax)
        m = rng.randint(1, emax)
        edges = []
        for _ in range(m):
            k = rng.randint(kmin, min(kmax, n))
            edges.append(sorted(rng.sample(range(n), k)))
        w = [Fraction(rng.randint(1, 16), 2 ** rng.randint(0, 3)) for _ in edges]
        h = Hypergraph(n, edges, w)
        if overlap_tree(h).connected:
            break
    s = [Fraction(rng.randint(-8, 8), 2 ** rng.randint(0, 3)) for _ in range(n - 1)]
    s.append(-sum(s))
    return h, s


def random_graph(rng, nmax=12, emax=30):
    """Connected 2-uniform hypergraph (spanning tree plus extra edges)."""
    n = rng.randint(2, nmax)
    perm = list(range(n))
    rng.shuffle(perm)
    edges = set()
    for i in range(1, n):
        a, b = perm[i], perm[rng.randrange(i)]
        edges.add((min(a, b), max(a, b)))
    extra = rng.randint(0, max(0, min(emax, n * (n - 1) // 2) - len(edges)))
    for _ in range(extra):
        a, b = rng.sample(range(n), 2)
        edges.add((min(a, b), max(a, b)))
    edges = sorted(edges)
    w = [Fraction(rng.randint(1, 16), 2 ** rng.randint(0, 3)) for _ in edges]
    s = [Fraction(rng.randint(-8, 8), 2 ** rng.randint(0, 3)) for _ in range(n - 1)]
    s.append(-sum(s))
    return Hypergraph(n, edges, w), s


@pytest.fixture
def triangle():
    return Hypergraph(3, [[0, 1, 2]]), (1, 0, -1)


@pytest.fixture
def single_edge():
    return Hypergraph(2, [[0, 1]]), (1, -1)


@pytest.fixture
def path():
    return Hypergraph(3, [[0, 1], [1, 2]]), (1, 0, -1)


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "SCORECARD", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
