import math
import random

import numpy as np
import pytest

from conftest import random_instance
from hyperpoisson.core import Hypergraph
from hyperpoisson.dual import check_dual_feasible, dual_objective, mass_of
from hyperpoisson.dualsolve import BarrierSpec, evaluate_barrier, solve_first_stage
from hyperpoisson.errors import InvalidInstance, MaxIterations, OutOfDomain
from hyperpoisson.lifted import build_lifted_graph, lifted_demand
from hyperpoisson.oracle import oracle_dual_optimum


def run(h, s, eps=1e-8, **kw):
    g = build_lifted_graph(h)
    return solve_first_stage(g, [float(v) for v in lifted_demand(h, s)], epsilon=eps, **kw)


def fd_check(spec, f, y, h=1e-6):
    _, grad, hess = evaluate_barrier(spec, f, y)
    num_g = np.zeros(2)
    num_h = np.zeros((2, 2))
    for i, (df, dy) in enumerate(((h, 0.0), (0.0, h))):
        vp, gp, _ = evaluate_barrier(spec, f + df, y + dy)
        vm, gm, _ = evaluate_barrier(spec, f - df, y - dy)
        num_g[i] = (vp - vm) / (2 * h)
        num_h[:, i] = (gp - gm) / (2 * h)
    return grad, num_g, hess, num_h


class TestBarrier:
    def test_transport_example(self):
        _, grad, hess = evaluate_barrier(BarrierSpec("transport", 4.0), 1.0, 1.0)
        assert np.allclose(grad, [-1 + 1 / 3, -1])
        assert np.allclose(hess, [[1 + 1 / 9, 0], [0, 1]])

    def test_quadratic_example_against_differences(self):
        spec = BarrierSpec("quadratic", 4.0, 1.0)
        grad, num_g, hess, num_h = fd_check(spec, 1.0, 1.0)
        assert np.allclose(grad, num_g, rtol=1e-5)
        assert np.allclose(hess, num_h, rtol=1e-4)
        assert np.allclose(hess, hess.T)
        assert np.all(np.linalg.eigvalsh(hess) > 0)

    def test_domain(self):
        with pytest.raises(OutOfDomain):
            evaluate_barrier(BarrierSpec("transport", 4.0), 4.0, 1.0)
        with pytest.raises(OutOfDomain):
            evaluate_barrier(BarrierSpec("quadratic", 4.0, 1.0), 2.0, 1.0)
        with pytest.raises(ValueError):
            BarrierSpec("quadratic", 4.0)

    def test_parameters(self):
        assert BarrierSpec("transport", 1.0).parameter == 3
        assert BarrierSpec("quadratic", 1.0, 1.0).parameter == 6
        assert BarrierSpec("transport", 1.0).nu == 6


class TestFirstStage:
    def test_triangle(self, triangle):
        out = run(*triangle)
        assert 0.5 <= out.objective <= 0.5 + 1e-8
        assert out.masses[0] == pytest.approx(1.0, abs=1e-6)
        assert out.converged and out.gap <= 1e-8 and out.residual <= 1e-10

    def test_single_edge(self, single_edge):
        out = run(*single_edge)
        assert out.objective == pytest.approx(0.5, abs=1e-8)
        assert np.allclose(out.dual.values[0], (1.0, -1.0), atol=1e-6)

    def test_zero_demand(self, triangle):
        out = run(triangle[0], [0, 0, 0])
        assert out.objective <= 1e-8
        assert out.masses[0] <= 1e-4

    def test_rejects_bad_epsilon(self, triangle):
        with pytest.raises(InvalidInstance):
            run(*triangle, eps=0.0)

    def test_max_iterations_carries_result(self, triangle):
        with pytest.raises(MaxIterations) as info:
            run(*triangle, eps=1e-12, max_outer=2)
        res = info.value.result
        assert res is not None and not res.converged
        assert res.gap == pytest.approx(res.objective - res.lower_bound)

    def test_trace_is_monotone(self, path):
        out = run(*path)
        assert out.monotone
        assert [r["iteration"] for r in out.trace] == list(range(1, len(out.trace) + 1))

    @pytest.mark.parametrize("seed", range(6))
    def test_sandwich_against_oracle(self, seed):
        rng = random.Random(100 + seed)
        h, s = random_instance(rng, nmax=7, emax=5)
        out = run(h, s, eps=1e-9)
        lo, up, _ = oracle_dual_optimum(h, s)
        assert out.lower_bound <= float(up) + 1e-9
        assert float(lo) <= out.objective + 1e-9
        assert out.objective - float(up) <= 1e-9

    def test_random_contract(self):
        rng = random.Random(11)
        for _ in range(25):
            h, s = random_instance(rng)
            out = run(h, s, eps=1e-9)
            assert out.converged and 0 <= out.gap <= 1e-9
            assert out.monotone
            rep = check_dual_feasible(h, s, out.dual, tol=1e-10)
            assert rep.feasible, rep.max_residual
            q = out.objective
            assert dual_objective(h, out.dual, strict=False) <= q + 1e-9
            mu = mass_of(out.dual)
            assert all(m <= M + 1e-9 for m, M in zip(mu, out.masses))
            assert math.isfinite(out.t)
