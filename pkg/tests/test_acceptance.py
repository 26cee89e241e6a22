"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected by ``conftest.py`` and repeated in the terminal
summary, so ``pytest tests/test_acceptance.py`` ends with the full scorecard.
"""
import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_graph, random_instance
from hyperpoisson.core import Hypergraph, primal_objective
from hyperpoisson.dual import DualVector, apply_B, dual_objective, mass_of, quadratic_mass_objective
from hyperpoisson.dualsolve import BarrierSpec, evaluate_barrier
from hyperpoisson.lifted import build_lifted_graph, node_imbalance, positive_circulation
from hyperpoisson.mcf import extract_residual_potentials, make_acyclic, solve_mcf_exact
from hyperpoisson.oracle import (
    effective_resistance,
    exact_laplacian,
    oracle_graph_poisson,
    oracle_primal_poisson,
    oracle_regularized,
    oracle_support_value,
)
from hyperpoisson.recovery import build_support_instance, grid, round_demand
from hyperpoisson.regularized import pairwise_response, solve_regularized
from hyperpoisson.serialization import poisson_certificate, verify_certificate
from hyperpoisson.solver import solve_poisson

F = Fraction
RANDOM_COUNT = 200
STAGE1_EPS = 1e-9

SCORECARD = []


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    SCORECARD.append(line)
    print(line)
    assert ok, line


def exact_zero_sum_blocks(eta):
    return all(sum(b) == 0 for b in eta.values)


# every lifted graph built by the suite is recorded for the circulation check
LIFTED = []
MCF_RUNS = []


def lifted(h):
    g = build_lifted_graph(h)
    LIFTED.append(g)
    return g


@pytest.fixture(scope="module")
def closed_form_runs():
    cases = {
        "triangle": (Hypergraph(3, [[0, 1, 2]]), (1, 0, -1), F(-1, 2)),
        "single edge": (Hypergraph(2, [[0, 1]]), (1, -1), F(-1, 2)),
        "two-edge path": (Hypergraph(3, [[0, 1], [1, 2]]), (1, 0, -1), F(-1)),
    }
    out = {}
    for name, (h, s, opt) in cases.items():
        lifted(h)
        out[name] = (h, s, opt, solve_poisson(h, s, epsilon=1e-8, grid_bits=20))
    return out


@pytest.fixture(scope="module")
def random_runs():
    rng = random.Random(20241019)
    runs = []
    for _ in range(RANDOM_COUNT):
        h, s = random_instance(rng, nmax=10, emax=8, kmin=2, kmax=5)
        lifted(h)
        res = solve_poisson(h, s, epsilon=STAGE1_EPS)
        MCF_RUNS.append((res.recovery.support.instance.mcf, res.recovery.support.solution,
                         res.recovery.support.certificate))
        runs.append((h, s, res))
    return runs


def test_criterion_01_closed_forms(closed_form_runs):
    worst_gap, worst_dev = 0.0, 0.0
    ok = True
    for h, s, opt, res in closed_form_runs.values():
        dev = abs(float(res.primal - opt))
        worst_gap = max(worst_gap, float(res.gap))
        worst_dev = max(worst_dev, dev)
        ok &= res.gap <= F(1, 10**4) and dev <= 1e-4
    # the triangle's dual optimum is 1/2
    h, s, _, res = closed_form_runs["triangle"]
    ok &= abs(float(res.dual) - 0.5) <= 1e-4
    report(1, ok, f"3 closed forms, worst gap {worst_gap:.2e}, worst |P(x)-OPT| {worst_dev:.2e} (tol 1e-4)")


def test_criterion_02_exact_certificate(random_runs):
    bad = []
    for i, (h, s, res) in enumerate(random_runs):
        eta = res.certificate.eta
        agg = apply_B(h, eta)
        feasible = eta.exact and exact_zero_sum_blocks(eta) and tuple(agg) == tuple(F(v) for v in s)
        cert = json.loads(json.dumps(poisson_certificate(h, s, res)))
        try:
            verify_certificate(cert)
        except Exception:
            feasible = False
        if not feasible:
            bad.append(i)
    report(2, not bad, f"{len(random_runs)} random instances, B·η̂ = s and zero-sum blocks exact, verify ok; "
                       f"failures {bad}")


def test_criterion_03_duality_sandwich(random_runs):
    tol = 2e-4
    bad = []
    worst_gap = 0.0
    for i, (h, s, res) in enumerate(random_runs):
        _, opt = oracle_primal_poisson(h, s)
        q = res.first_stage.objective
        p = float(res.primal)
        worst_gap = max(worst_gap, float(res.gap))
        if not (-q - tol <= opt <= p + tol) or res.gap > F(1, 10**3):
            bad.append(i)
    report(3, not bad, f"{len(random_runs)} instances, -q(mu) <= OPT_oracle <= P(x) within {tol:g}, "
                       f"worst certified gap {worst_gap:.2e} (tol 1e-3); failures {bad}")


def test_criterion_04_mass_identity():
    rng = random.Random(4)
    bad = 0
    for _ in range(1000):
        h, _ = random_instance(rng)
        blocks = []
        for e in h.edges:
            b = [F(rng.randint(-64, 64), 2 ** rng.randint(0, 6)) for _ in e[1:]]
            blocks.append(tuple([-sum(b)] + b))
        eta = DualVector(tuple(blocks), True)
        if quadratic_mass_objective(h, mass_of(eta)) != dual_objective(h, eta):
            bad += 1
    report(4, bad == 0, f"1000 random zero-sum edge-local eta, q(mass_of(eta)) == D(eta) exactly; mismatches {bad}")


def _support_instances(seed, count):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        h, s = random_instance(rng, nmax=6, emax=4, kmax=4)
        lifted(h)
        rho = grid(rng.randint(1, 4))
        sh = round_demand(s, rho)
        r = [rho * rng.randint(0, 16) for _ in h.edges]
        out.append((h, sh, r, rho))
    return out


def test_criterion_05_support_identity():
    bad = []
    for i, (h, sh, r, rho) in enumerate(_support_instances(5, 100)):
        sup = build_support_instance(h, sh, r, rho)
        sol = solve_mcf_exact(sup.mcf)
        cert = extract_residual_potentials(sup.mcf, sol)
        MCF_RUNS.append((sup.mcf, sol, cert))
        value = rho * rho * sol.objective
        lp_value, _ = oracle_support_value(h, sh, r)
        if value != lp_value:
            bad.append(i)
    report(5, not bad, f"100 random support instances, MCF value == dense simplex LP value exactly; mismatches {bad}")


def test_criterion_06_residual_potentials(random_runs):
    # random_runs is requested so its MCF solves are included
    bad = 0
    for inst, sol, cert in MCF_RUNS:
        p, lam = cert.potentials, cert.lambda_plus
        for a in range(inst.num_arcs):
            sigma = inst.cost[a] - (p[inst.heads[a]] - p[inst.tails[a]]) + lam[a]
            if sigma < 0 or lam[a] < 0 or sigma * sol.flow[a] != 0 or lam[a] * (inst.capacity[a] - sol.flow[a]) != 0:
                bad += 1
                break
        else:
            primal = sum(c * f for c, f in zip(inst.cost, sol.flow))
            dual = sum(b * q for b, q in zip(inst.demand, p)) - sum(u * m for u, m in zip(inst.capacity, lam))
            bad += primal != dual
    report(6, bad == 0 and len(MCF_RUNS) >= 100,
           f"{len(MCF_RUNS)} MCF solves, complementary slackness and primal == dual exact; violations {bad}")


def test_criterion_07_acyclic_bound():
    bad = []
    for i, (h, sh, r, rho) in enumerate(_support_instances(7, 100)):
        sup = build_support_instance(h, sh, r, rho)
        sol = make_acyclic(sup.mcf, solve_mcf_exact(sup.mcf))
        if 2 * max(sol.flow, default=0) > sum(abs(b) for b in sup.mcf.demand):
            bad.append(i)
    report(7, not bad, f"100 support instances after make_acyclic, max arc flow <= |demand|_1/2; failures {bad}")


def test_criterion_08_graph_specialization():
    rng = random.Random(8)
    worst_id, worst_gap = 0.0, 0.0
    for _ in range(50):
        h, s = random_graph(rng, nmax=12)
        lifted(h)
        res = solve_poisson(h, s, epsilon=STAGE1_EPS)
        xs = oracle_graph_poisson(h, s)
        L = exact_laplacian(h)
        d = [a - b for a, b in zip(res.x, xs)]
        quad = sum(d[i] * L[i][j] * d[j] for i in range(h.n) for j in range(h.n)) / 2
        excess = primal_objective(h, s, res.x)[1] - primal_objective(h, s, xs)[1]
        worst_id = max(worst_id, abs(float(excess - quad)))
        worst_gap = max(worst_gap, float(res.gap))
    ok = worst_id <= 1e-8 and worst_gap <= 1e-4
    report(8, ok, f"50 random graphs, |P(x)-OPT - |x-x*|_L^2/2| max {worst_id:.2e} (tol 1e-8), "
                  f"worst gap {worst_gap:.2e} (tol 1e-4)")


def test_criterion_09_circulation_kernel(closed_form_runs, random_runs):
    rng = random.Random(9)
    for _ in range(100):
        lifted(random_instance(rng)[0])
    bad = sum(1 for g in LIFTED if any(node_imbalance(g, positive_circulation(g))))
    report(9, bad == 0, f"{len(LIFTED)} lifted graphs, A·c == 0 exactly for the positive circulation; failures {bad}")


def _fd(spec, f, y, step):
    _, grad, hess = evaluate_barrier(spec, f, y)
    num_g = np.zeros(2)
    num_h = np.zeros((2, 2))
    for i, (df, dy) in enumerate(((step, 0.0), (0.0, step))):
        vp, gp, _ = evaluate_barrier(spec, f + df, y + dy)
        vm, gm, _ = evaluate_barrier(spec, f - df, y - dy)
        num_g[i] = (vp - vm) / (2 * step)
        num_h[:, i] = (gp - gm) / (2 * step)
    return grad, num_g, hess, num_h


def test_criterion_10_barrier_derivatives():
    rng = np.random.default_rng(10)
    worst = 0.0
    for k in range(100):
        cap = float(rng.uniform(0.5, 20))
        f = float(rng.uniform(0.05, 0.95)) * cap
        if k % 2 == 0:
            spec = BarrierSpec("transport", cap)
            y = float(rng.uniform(0.1, 10))
            room = min(f, cap - f, y)
        else:
            w = float(rng.uniform(0.25, 4))
            spec = BarrierSpec("quadratic", cap, w)
            floor = f * f / (2 * w)
            y = floor + float(rng.uniform(0.1, 5))
            room = min(f, cap - f, y - floor)
        grad, num_g, hess, num_h = _fd(spec, f, y, 1e-4 * room)
        rel_g = np.linalg.norm(grad - num_g) / np.linalg.norm(grad)
        rel_h = np.linalg.norm(hess - num_h) / np.linalg.norm(hess)
        worst = max(worst, rel_g, rel_h)
    report(10, worst <= 1e-5, f"100 random interior points (both arc classes), worst relative FD error {worst:.2e} "
                              "(tol 1e-5)")


def test_criterion_11_regularized():
    h = Hypergraph(2, [[0, 1]])
    res = solve_regularized(h, 1, (1, 0), epsilon=1e-8)
    dev = max(abs(float(res.x[0]) - 2 / 3), abs(float(res.x[1]) - 1 / 3))
    ok = dev <= 1e-4 and res.gap <= F(1, 10**4)
    rng = random.Random(11)
    worst = -math.inf
    for _ in range(50):
        h, s = random_instance(rng, nmax=8, emax=6)
        s = [v + F(rng.randint(-8, 8), 8) for v in s]
        lam = F(rng.randint(1, 16), 8)
        lifted(h)
        res = solve_regularized(h, lam, s, epsilon=STAGE1_EPS)
        xo, _ = oracle_regularized(h, lam, s)
        dist = sum(float(d) * (float(a) - b) ** 2 for d, a, b in zip(h.degrees, res.x, xo))
        worst = max(worst, float(lam) / 2 * dist - float(res.gap))
    ok &= worst <= 1e-6
    report(11, ok, f"single edge |x-(2/3,1/3)| {dev:.2e}, gap {float(res.gap):.2e}; 50 random instances, "
                   f"max (lam/2)|x-x*|_D^2 - gap = {worst:.2e} (tol 1e-6)")


def test_criterion_12_pairwise_response():
    rng = random.Random(12)
    worst = 0.0
    for _ in range(30):
        h, _ = random_graph(rng, nmax=12)
        u, v = rng.sample(range(h.n), 2)
        r = pairwise_response(h, u, v, epsilon=STAGE1_EPS)
        worst = max(worst, abs(float(r.value) - effective_resistance(h, u, v)))
    report(12, worst <= 1e-3, f"30 random graphs, |response - effective resistance| max {worst:.2e} (tol 1e-3)")


def test_criterion_13_monotone_ipm(closed_form_runs, random_runs):
    runs = [(res.first_stage, 1e-8) for *_, res in closed_form_runs.values()]
    runs += [(res.first_stage, STAGE1_EPS) for *_, res in random_runs]
    bad = [i for i, (fs, eps) in enumerate(runs) if not (fs.monotone and fs.converged and fs.gap <= eps)]
    report(13, not bad, f"{len(runs)} stage-1 runs, q(mu) non-increasing and final gap <= eps; failures {bad}")


def test_criterion_14_not_reproducible():
    line = ("criterion 14: N/A   asymptotic running time, the exp(-log^C P) accuracy regime and high-probability "
            "guarantees are not reproducible at desk scale; covered by criteria 1-13")
    SCORECARD.append(line)
    print(line)
    pytest.skip("asymptotic claims are not reproducible at desk scale")
