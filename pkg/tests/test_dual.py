from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperpoisson.core import Hypergraph
from hyperpoisson.dual import (
    DualVector,
    TransportSplit,
    check_dual_feasible,
    dual_objective,
    dual_to_split,
    mass_of,
    quadratic_mass_objective,
    split_to_dual,
)
from hyperpoisson.errors import InvariantViolation, NotZeroSumOnEdge

F = Fraction
H3 = Hypergraph(5, [[0, 1, 2], [2, 3], [1, 3, 4]], ["1/2", 3, "5/4"])


@st.composite
def zero_sum_duals(draw, h=H3):
    blocks = []
    for e in h.edges:
        vals = [F(draw(st.integers(-64, 64)), 2 ** draw(st.integers(0, 6))) for _ in e[1:]]
        blocks.append(tuple([-sum(vals)] + vals))
    return DualVector(tuple(blocks), True)


def test_dual_objective_examples(triangle, path):
    h, _ = triangle
    assert dual_objective(h, DualVector.from_lists([[1, 0, -1]])) == F(1, 2)
    assert dual_objective(h, DualVector.zeros(h)) == 0
    h, _ = path
    assert dual_objective(h, DualVector.from_lists([[1, -1], [1, -1]])) == 1


def test_strict_mode_rejects_nonzero_sum(triangle):
    h, _ = triangle
    with pytest.raises(NotZeroSumOnEdge):
        dual_objective(h, DualVector.from_lists([[1, 0, 0]]))
    assert dual_objective(h, DualVector.from_lists([[1, 0, 0]]), strict=False) == F(1, 8)


def test_feasibility_reports(triangle, path):
    h, s = triangle
    assert check_dual_feasible(h, s, DualVector.from_lists([[1, 0, -1]])).feasible
    rep = check_dual_feasible(h, s, DualVector.zeros(h))
    assert not rep.feasible
    assert rep.vertex_residuals == (1, 0, -1)
    assert rep.bad_vertices == (0, 2)
    h, s = path
    assert check_dual_feasible(h, s, DualVector.from_lists([[1, -1], [1, -1]])).feasible
    approx = DualVector(((1.0 + 1e-12, -1.0 - 1e-12), (1.0, -1.0)), False)
    rep = check_dual_feasible(h, s, approx)
    assert rep.feasible and 0 < rep.max_residual < 1e-11


def test_mass_examples():
    assert mass_of(DualVector.from_lists([[1, 0, -1]])) == (1,)
    assert mass_of(DualVector.from_lists([[0, 0]])) == (0,)
    assert mass_of(DualVector.from_lists([["1/2", "1/2", -1]])) == (1,)


def test_quadratic_mass_examples():
    h1 = Hypergraph(2, [[0, 1]])
    assert quadratic_mass_objective(h1, [1]) == F(1, 2)
    assert quadratic_mass_objective(h1, [0]) == 0
    assert quadratic_mass_objective(Hypergraph(3, [[0, 1], [1, 2]]), [1, 1]) == 1
    with pytest.raises(InvariantViolation):
        quadratic_mass_objective(h1, [-1])


@given(zero_sum_duals())
@settings(max_examples=200)
def test_mass_identity(eta):
    assert quadratic_mass_objective(H3, mass_of(eta)) == dual_objective(H3, eta)


@given(zero_sum_duals())
@settings(max_examples=100)
def test_split_round_trip(eta):
    split = dual_to_split(eta)
    assert split_to_dual(split) == eta
    assert split.mu == mass_of(eta)


def test_split_examples():
    sp = dual_to_split(DualVector.from_lists([[1, 0, -1]]))
    assert sp.p == ((1, 0, 0),) and sp.n == ((0, 0, 1),) and sp.mu == (1,)
    h = Hypergraph(3, [[0, 1, 2]])
    eta = split_to_dual(TransportSplit(((F(1, 2), F(1, 2), 0),), ((0, 0, 1),), (1,)))
    assert eta.values == ((F(1, 2), F(1, 2), -1),)
    assert dual_objective(h, eta) == F(1, 2) == quadratic_mass_objective(h, [1])
    h2 = Hypergraph(2, [[0, 1]])
    eta = split_to_dual(TransportSplit(((1, 0),), ((1, 0),), (1,)))
    assert eta.values == ((0, 0),)
    assert dual_objective(h2, eta) == 0 < quadratic_mass_objective(h2, [1])


@given(st.lists(st.integers(0, 32), min_size=3, max_size=3), st.lists(st.integers(0, 32), min_size=3, max_size=3))
def test_split_never_beats_mass(p, n):
    total_p, total_n = sum(p), sum(n)
    if total_p == 0 or total_n == 0:
        return
    # rescale so both sides carry the same mass
    mu = F(total_p * total_n)
    pe = tuple(F(a * total_n) for a in p)
    ne = tuple(F(b * total_p) for b in n)
    h = Hypergraph(3, [[0, 1, 2]])
    eta = split_to_dual(TransportSplit((pe,), (ne,), (mu,)))
    assert dual_objective(h, eta) <= quadratic_mass_objective(h, [mu])


def test_split_invariants_enforced():
    with pytest.raises(InvariantViolation):
        split_to_dual(TransportSplit(((1, 0),), ((0, 0),), (1,)))
    with pytest.raises(InvariantViolation):
        dual_to_split(DualVector.from_lists([[1, 0]]))
