"""Brute-force references kept independent of the solver pipeline.

Exact two-phase simplex over ``Fraction`` (Bland's rule), restarted projected
subgradient for the primal problems, dense Laplacian solves for graphs.
Everything here favours obviousness over speed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numba
import numpy as np

from .core import Hypergraph, as_demand, primal_objective, project_to_weighted_mean_zero
from .dual import DualVector, dual_objective
from .errors import Infeasible, InvalidInstance, Unbounded


@dataclass(frozen=True)
class LinearProgram:
    """``min/max c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""

    c: Sequence
    A_ub: Sequence = ()
    b_ub: Sequence = ()
    A_eq: Sequence = ()
    b_eq: Sequence = ()
    maximize: bool = False

    @property
    def num_vars(self) -> int:
        return len(self.c)


def _pivot(T, basis, r, j):
    row = T[r]
    p = row[j]
    if p != 1:
        T[r] = row = [v / p for v in row]
    nz = [k for k, v in enumerate(row) if v]
    for i, other in enumerate(T):
        if i == r:
            continue
        f = other[j]
        if f:
            for k in nz:
                other[k] -= f * row[k]
    basis[r] = j


def _run(T, basis, allowed):
    """Bland's-rule simplex on tableau ``T`` whose last row is the reduced cost row."""
    m = len(T) - 1
    obj = T[-1]
    while True:
        j = next((k for k in allowed if obj[k] < 0), None)
        if j is None:
            return
        best = None
        for i in range(m):
            a = T[i][j]
            if a > 0:
                ratio = T[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded("linear program is unbounded")
        _pivot(T, basis, best[1], j)


def oracle_dense_simplex(lp: LinearProgram):
    """Exact optimum ``(value, x)`` of a small LP in rational arithmetic.

    Raises :class:`Infeasible` or :class:`Unbounded`.
    """
    nv = lp.num_vars
    c = [Fraction(v) for v in lp.c]
    if lp.maximize:
        c = [-v for v in c]
    rows = []
    for a, b in zip(lp.A_ub, lp.b_ub):
        rows.append(([Fraction(v) for v in a], Fraction(b), True))
    for a, b in zip(lp.A_eq, lp.b_eq):
        rows.append(([Fraction(v) for v in a], Fraction(b), False))
    if len(lp.A_ub) != len(lp.b_ub) or len(lp.A_eq) != len(lp.b_eq):
        raise InvalidInstance("constraint matrix and right-hand side disagree")
    if any(len(a) != nv for a, _, _ in rows):
        raise InvalidInstance("constraint row has the wrong width")
    ns = sum(1 for *_, ub in rows if ub)
    m = len(rows)
    width = nv + ns + m + 1
    T = []
    basis = []
    si = 0
    for i, (a, b, ub) in enumerate(rows):
        row = a + [Fraction(0)] * (ns + m) + [b]
        if ub:
            row[nv + si] = Fraction(1)
            si += 1
        if b < 0:
            row = [-v for v in row]
        row[nv + ns + i] = Fraction(1)
        T.append(row)
        basis.append(nv + ns + i)
    art = range(nv + ns, nv + ns + m)
    phase1 = [Fraction(0)] * width
    for row in T:
        for k in range(width):
            if k < nv + ns or k == width - 1:
                phase1[k] -= row[k]
    T.append(phase1)
    _run(T, basis, range(nv + ns))
    if T[-1][-1] != 0:
        raise Infeasible("linear program is infeasible")
    T.pop()
    for i in range(len(T) - 1, -1, -1):
        if basis[i] in art:
            j = next((k for k in range(nv + ns) if T[i][k] != 0), None)
            if j is None:
                del T[i]
                del basis[i]
            else:
                _pivot(T, basis, i, j)
    cost = c + [Fraction(0)] * (ns + m) + [Fraction(0)]
    red = list(cost)
    for i, bj in enumerate(basis):
        cb = cost[bj]
        if cb:
            red = [r - cb * v for r, v in zip(red, T[i])]
    T.append(red)
    _run(T, basis, range(nv + ns))
    x = [Fraction(0)] * nv
    for i, bj in enumerate(basis):
        if bj < nv:
            x[bj] = T[i][-1]
    value = sum(a * b for a, b in zip(c, x))
    if lp.maximize:
        value = -value
    _check_lp(lp, x)
    return value, tuple(x)


def _check_lp(lp: LinearProgram, x):
    if any(v < 0 for v in x):
        raise AssertionError("simplex returned a negative coordinate")
    for a, b in zip(lp.A_ub, lp.b_ub):
        if sum(Fraction(p) * q for p, q in zip(a, x)) > Fraction(b):
            raise AssertionError("simplex violated an inequality")
    for a, b in zip(lp.A_eq, lp.b_eq):
        if sum(Fraction(p) * q for p, q in zip(a, x)) != Fraction(b):
            raise AssertionError("simplex violated an equality")


def support_lp(h: Hypergraph, s: Sequence, budgets: Sequence) -> LinearProgram:
    """``max <s, x>`` over ``R_e(x) <= r_e`` written with nonnegative variables.

    Variables are ``X_v, U_e, L_e`` shifted by ``K = sum(r)``; ``X_0 = K``
    pins the translation, which does not change the value since ``sum(s) = 0``.
    Layout: ``X`` (n), then ``U`` (m), then ``L`` (m).
    """
    n, m = h.n, h.num_edges
    s = as_demand(s, n)
    r = [Fraction(v) for v in budgets]
    K = sum(r)
    nv = n + 2 * m
    A_ub, b_ub = [], []
    for i, e in enumerate(h.edges):
        for v in e:
            row = [0] * nv
            row[v] = 1
            row[n + i] = -1
            A_ub.append(row)
            b_ub.append(0)
            row = [0] * nv
            row[n + m + i] = 1
            row[v] = -1
            A_ub.append(row)
            b_ub.append(0)
        row = [0] * nv
        row[n + i] = 1
        row[n + m + i] = -1
        A_ub.append(row)
        b_ub.append(r[i])
    pin = [0] * nv
    pin[0] = 1
    c = list(s) + [0] * (2 * m)
    return LinearProgram(c, A_ub, b_ub, [pin], [K], maximize=True)


def oracle_support_value(h: Hypergraph, s: Sequence, budgets: Sequence):
    """Exact support value and a maximizer shifted into the normalized subspace."""
    value, z = oracle_dense_simplex(support_lp(h, s, budgets))
    return value, project_to_weighted_mean_zero(h, z[: h.n])


def _csr(h: Hypergraph):
    ptr = [0]
    idx = []
    for e in h.edges:
        idx.extend(e)
        ptr.append(len(idx))
    return np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64)


@numba.njit(cache=True)
def _subgradient(n, ptr, idx, w, s, lam_d, iters, step, epochs):
    # restarted normalized subgradient on E(x) + 0.5 sum lam_d x^2 - <s, x>
    x = np.zeros(n)
    best = 0.0
    bestx = x.copy()
    history = np.empty(iters)
    m = len(w)
    per = max(1, iters // epochs)
    it = 0
    for _ in range(epochs):
        x[:] = bestx
        for k in range(1, per + 1):
            g = lam_d * x - s
            val = 0.5 * np.dot(lam_d * x, x) - np.dot(s, x)
            for e in range(m):
                a = idx[ptr[e]]
                b = a
                for j in range(ptr[e], ptr[e + 1]):
                    v = idx[j]
                    if x[v] > x[a]:
                        a = v
                    if x[v] < x[b]:
                        b = v
                r = x[a] - x[b]
                val += 0.5 * w[e] * r * r
                g[a] += w[e] * r
                g[b] -= w[e] * r
            if val < best:
                best = val
                bestx[:] = x
            if it < iters:
                history[it] = best
                it += 1
            gn = np.sqrt(np.dot(g, g))
            if gn == 0.0:
                return bestx, best, history[:it]
            x -= step / np.sqrt(k) * g / gn
        step *= 0.5
    return bestx, best, history[:it]


@dataclass(frozen=True)
class OracleRun:
    x: np.ndarray
    value: float
    history: np.ndarray = field(repr=False)

    @property
    def tail_change(self) -> float:
        """Decrease of the best value over the last 10% of iterations."""
        if len(self.history) < 10:
            return 0.0
        k = len(self.history) // 10
        return float(self.history[-k - 1] - self.history[-1])

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.history) <= 0))


def _run_subgradient(h, s, lam_d, iterations, step, epochs):
    ptr, idx = _csr(h)
    w = np.asarray([float(v) for v in h.weights])
    sv = np.asarray([float(v) for v in s])
    if step is None:
        step = max(1.0, float(np.abs(sv).sum()) / float(w.min()))
    x, value, hist = _subgradient(h.n, ptr, idx, w, sv, lam_d, int(iterations), float(step), int(epochs))
    return OracleRun(x, float(value), hist)


def oracle_primal_poisson(h: Hypergraph, s: Sequence, iterations: int = 100_000, step: float | None = None,
                          epochs: int = 25, return_run: bool = False):
    """Best value of ``E(x) - <s, x>`` found by restarted projected subgradient.

    The objective is translation invariant for zero-sum ``s``, so the iterate
    is projected onto the normalized subspace only at the end.  Returns
    ``(x, value)``, or the full :class:`OracleRun` if ``return_run``.
    """
    demand = as_demand(s, h.n)
    if sum(demand) != 0:
        raise InvalidInstance("demand must sum to zero")
    run = _run_subgradient(h, demand, np.zeros(h.n), iterations, step, epochs)
    d = np.asarray([float(v) for v in h.degrees])
    x = run.x - float(d @ run.x) / float(d.sum())
    run = OracleRun(x, run.value, run.history)
    return run if return_run else (x, run.value)


def oracle_regularized(h: Hypergraph, lam, s: Sequence, iterations: int = 100_000, step: float | None = None,
                       epochs: int = 25, return_run: bool = False):
    """Subgradient minimizer of ``E(x) + (lam/2) x'Dx - <s, x>``."""
    demand = as_demand(s, h.n)
    lam_d = float(lam) * np.asarray([float(v) for v in h.degrees])
    run = _run_subgradient(h, demand, lam_d, iterations, step, epochs)
    return run if return_run else (run.x, run.value)


def laplacian(h: Hypergraph) -> np.ndarray:
    """Dense weighted Laplacian of a 2-uniform hypergraph."""
    L = np.zeros((h.n, h.n))
    for e, w in zip(h.edges, h.weights):
        if len(e) != 2:
            raise InvalidInstance("laplacian needs a 2-uniform hypergraph")
        a, b = e
        w = float(w)
        L[a, a] += w
        L[b, b] += w
        L[a, b] -= w
        L[b, a] -= w
    return L


def exact_laplacian(h: Hypergraph) -> list:
    n = h.n
    L = [[Fraction(0)] * n for _ in range(n)]
    for e, w in zip(h.edges, h.weight_fractions):
        if len(e) != 2:
            raise InvalidInstance("laplacian needs a 2-uniform hypergraph")
        a, b = e
        L[a][a] += w
        L[b][b] += w
        L[a][b] -= w
        L[b][a] -= w
    return L


def oracle_graph_poisson(h: Hypergraph, s: Sequence) -> tuple:
    """Exact ``x`` with ``Lx = s`` and ``<Dx, 1> = 0`` on a connected graph.

    Grounds vertex 0, solves the reduced system by Gauss-Jordan elimination
    in rationals and shifts into the normalized subspace.
    """
    s = as_demand(s, h.n)
    if sum(s) != 0:
        raise InvalidInstance("demand must sum to zero")
    n = h.n
    L = exact_laplacian(h)
    M = [L[i][1:] + [s[i]] for i in range(1, n)]
    k = n - 1
    for col in range(k):
        piv = next((r for r in range(col, k) if M[r][col] != 0), None)
        if piv is None:
            raise InvalidInstance("graph is not connected")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(k):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    x = [Fraction(0)] + [M[i][-1] for i in range(k)]
    return project_to_weighted_mean_zero(h, x)


def effective_resistance(h: Hypergraph, u: int, v: int) -> float:
    """``(e_u - e_v)' L^+ (e_u - e_v)`` via the dense pseudoinverse."""
    L = laplacian(h)
    chi = np.zeros(h.n)
    chi[u] += 1.0
    chi[v] -= 1.0
    return float(chi @ np.linalg.pinv(L) @ chi)


def oracle_dual_optimum(h: Hypergraph, s: Sequence, iterations: int = 100_000, tie_tol: float = 1e-6):
    """Rigorous bracket ``(lower, upper, eta)`` around the dual optimum.

    ``upper`` is the exact dual value of a feasible ``eta`` produced by the
    dense simplex: it selects a subgradient of the energy at the subgradient
    oracle's point (mass on near-argmax/argmin vertices) that balances the
    demand exactly, matching each edge's mass to ``w_e R_e`` as closely as it
    can in l1.  ``lower = -P(x)`` by weak duality.
    """
    demand = as_demand(s, h.n)
    x, _ = oracle_primal_poisson(h, demand, iterations)
    xf = [Fraction(float(v)) for v in x]
    lower = -primal_objective(h, demand, xf)[1]
    tol = tie_tol
    while True:
        try:
            eta = _restore(h, demand, x, tol)
            break
        except Infeasible:
            if tol > 1e6:
                raise
            tol *= 10
    upper = dual_objective(h, eta)
    return lower, upper, eta


def _restore(h, demand, x, tol):
    n, m = h.n, h.num_edges
    cols = []
    for i, e in enumerate(h.edges):
        vals = [x[v] for v in e]
        hi, lo = max(vals), min(vals)
        for v in e:
            if x[v] >= hi - tol:
                cols.append(("p", i, v))
            if x[v] <= lo + tol:
                cols.append(("n", i, v))
    nv = len(cols) + 2 * m
    A_eq, b_eq = [], []
    for i in range(m):
        row = [0] * nv
        for k, (kind, j, _) in enumerate(cols):
            if j == i:
                row[k] = 1 if kind == "p" else -1
        A_eq.append(row)
        b_eq.append(0)
    for v in range(n):
        row = [0] * nv
        for k, (kind, _, u) in enumerate(cols):
            if u == v:
                row[k] = 1 if kind == "p" else -1
        A_eq.append(row)
        b_eq.append(demand[v])
    for i, (e, w) in enumerate(zip(h.edges, h.weights)):
        row = [0] * nv
        for k, (kind, j, _) in enumerate(cols):
            if j == i and kind == "p":
                row[k] = 1
        row[len(cols) + 2 * i] = -1
        row[len(cols) + 2 * i + 1] = 1
        vals = [x[v] for v in e]
        A_eq.append(row)
        b_eq.append(Fraction(float(w) * float(max(vals) - min(vals))))
    c = [0] * len(cols) + [1] * (2 * m)
    _, z = oracle_dense_simplex(LinearProgram(c, A_eq=A_eq, b_eq=b_eq))
    blocks = [dict((v, Fraction(0)) for v in e) for e in h.edges]
    for k, (kind, i, v) in enumerate(cols):
        blocks[i][v] += z[k] if kind == "p" else -z[k]
    return DualVector(tuple(tuple(b[v] for v in e) for b, e in zip(blocks, h.edges)), True)
