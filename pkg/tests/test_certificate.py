import random
from fractions import Fraction

import pytest

from conftest import random_graph, random_instance
from hyperpoisson.certificate import (
    DEFAULT_GAMMA,
    bregman_gap,
    certify_pair,
    check_certificate,
    quantization_bits,
    repair_dual_certificate,
)
from hyperpoisson.core import Hypergraph, energy, primal_objective
from hyperpoisson.dual import DualVector, apply_B, dual_objective
from hyperpoisson.errors import InvariantViolation, NonDyadic, NotConnected, VerificationError
from hyperpoisson.oracle import exact_laplacian, oracle_graph_poisson
from hyperpoisson.solver import solve_poisson

F = Fraction


def dv(*blocks, exact=True):
    return DualVector(tuple(tuple(b) for b in blocks), exact)


def test_quantization_bits():
    h = Hypergraph(3, [[0, 1, 2]])
    k = quantization_bits(h, DEFAULT_GAMMA)
    theta = DEFAULT_GAMMA / 2**20 / 16
    assert F(1, 2**k) <= theta < F(1, 2 ** (k - 1))
    assert k == 54


def test_repair_fixed_point(triangle):
    h, s = triangle
    raw = dv((1, 0, -1))
    cert = repair_dual_certificate(h, s, raw)
    assert cert.eta == cert.quantized == raw
    assert cert.transfers == ()
    assert cert.representatives == (0,)


def test_repair_triangle(triangle):
    h, s = triangle
    raw = dv((1 + 1e-12, -1e-12, -1.0), exact=False)
    cert = repair_dual_certificate(h, s, raw)
    assert cert.eta.values == ((1, 0, -1),)
    assert apply_B(h, cert.eta) == [1, 0, -1]
    cert.check(h, s)


def test_repair_path_transfer(path):
    h, s = path
    raw = dv((1.0, -1.0), (1.0, -1.0 - 1e-13), exact=False)
    cert = repair_dual_certificate(h, s, raw)
    check_certificate(h, s, cert.eta)
    assert cert.representatives == (0, 1)
    assert len(cert.transfers) == 1
    v, p, e, t = cert.transfers[0]
    assert (v, p, e) == (2, 1, 1) and t != 0
    before = dual_objective(h, cert.quantized, strict=False)
    assert dual_objective(h, cert.eta) - before <= DEFAULT_GAMMA


def test_repair_errors(triangle):
    h, _ = triangle
    raw = dv((1.0, 0.0, -1.0), exact=False)
    with pytest.raises(NonDyadic):
        repair_dual_certificate(h, (F(1, 3), 0, F(-1, 3)), raw)
    h2 = Hypergraph(4, [[0, 1], [2, 3]])
    with pytest.raises(NotConnected):
        repair_dual_certificate(h2, (1, -1, 0, 0), dv((1.0, -1.0), (0.0, 0.0), exact=False))


def test_repair_random_pipeline_duals():
    rng = random.Random(11)
    for _ in range(10):
        h, s = random_instance(rng)
        res = solve_poisson(h, s)
        raw = res.first_stage.dual
        assert dual_objective(h, res.certificate.eta) - F(dual_objective(h, raw, strict=False)) <= DEFAULT_GAMMA


def test_check_certificate_messages(triangle):
    h, s = triangle
    with pytest.raises(VerificationError, match="does not sum to zero"):
        check_certificate(h, s, dv((1, 0, 0)))
    with pytest.raises(VerificationError, match="at vertex 0"):
        check_certificate(h, s, dv((2, 0, -2)))
    with pytest.raises(VerificationError, match="exact"):
        check_certificate(h, s, dv((1.0, 0.0, -1.0), exact=False))


def test_certify_pair_examples(triangle):
    h, s = triangle
    eta = dv((1, 0, -1))
    rep = certify_pair(h, s, (F(1, 2), 0, F(-1, 2)), eta)
    assert (rep.primal, rep.dual, rep.gap) == (F(-1, 2), F(1, 2), 0)
    assert rep.ok
    rep = certify_pair(h, s, (0, 0, 0), eta)
    assert rep.gap == F(1, 2)


def test_certify_pair_pipeline(triangle):
    h, s = triangle
    res = solve_poisson(h, s, epsilon=1e-8)
    rep = certify_pair(h, s, res.x, res.certificate)
    assert rep == res.report
    assert 0 <= rep.gap <= F(1, 10**4)


def test_bregman_triangle(triangle):
    h, s = triangle
    xs = (F(1, 2), 0, F(-1, 2))
    assert bregman_gap(h, s, (1, 0, -1), xs, s) == F(1, 2)
    assert bregman_gap(h, s, xs, xs, s) == 0


def test_bregman_subgradient_independence(triangle):
    # any xi in the subdifferential at x* with s - xi parallel to D1 gives the same value
    h, s = triangle
    xs = (F(1, 2), 0, F(-1, 2))
    x = (F(1, 4), F(1, 4), F(-1, 2))
    ref = bregman_gap(h, s, x, xs, s)
    _, p = primal_objective(h, s, x)
    assert ref == p - F(-1, 2)
    with pytest.raises(InvariantViolation):
        bregman_gap(h, s, x, xs, (2, 0, -2))


def test_bregman_graph_quadratic_form():
    rng = random.Random(12)
    for _ in range(20):
        h, s = random_graph(rng, nmax=8)
        xs = oracle_graph_poisson(h, s)
        L = exact_laplacian(h)
        x = [F(rng.randint(-8, 8), 4) for _ in range(h.n)]
        dsum = sum(h.degrees)
        shift = sum(d * v for d, v in zip(h.degrees, x)) / dsum
        x = [v - shift for v in x]
        diff = [a - b for a, b in zip(x, xs)]
        quad = sum(diff[i] * L[i][j] * diff[j] for i in range(h.n) for j in range(h.n)) / 2
        xi = [sum(L[i][j] * xs[j] for j in range(h.n)) for i in range(h.n)]
        assert bregman_gap(h, s, x, xs, xi) == quad
        assert energy(h, xs) == sum(xs[i] * xi[i] for i in range(h.n)) / 2
