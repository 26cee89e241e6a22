"""First-stage solver: barrier path following for the quadratic-cost lifted flow.

The problem is ``min sum_e mu_e^2 / (2 w_e)`` over lifted flows ``A f = b``,
``0 <= f <= cap``, written in epigraph form with one ``y`` per arc and the
per-arc logarithmic barriers below.  Each Newton step eliminates ``dy`` arc by
arc and solves the scaled augmented KKT system for ``(df, nu)`` with an LU
factorization (dense for small lifts, sparse otherwise).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import splu

from .core import Hypergraph, primal_objective
from .dual import DualVector
from .errors import InvalidInstance, MaxIterations, NumericalBreakdown, OutOfDomain
from .lifted import QUADRATIC, TRANSPORT, LiftedGraph, feasible_start, induced_dual

logger = logging.getLogger(__name__)

TRANSPORT_PARAMETER = 3
QUADRATIC_PARAMETER = 6
NU = 6
DENSE_LIMIT = 400
DUAL_REGULARIZATION = 1e-3


@dataclass(frozen=True)
class BarrierSpec:
    kind: str
    cap: float
    weight: float | None = None

    def __post_init__(self):
        if self.kind not in ("transport", "quadratic"):
            raise ValueError(f"unknown arc class {self.kind!r}")
        if self.kind == "quadratic" and (self.weight is None or self.weight <= 0):
            raise ValueError("quadratic arcs need a positive weight")
        if self.cap <= 0:
            raise ValueError("cap must be positive")

    @property
    def parameter(self) -> int:
        return TRANSPORT_PARAMETER if self.kind == "transport" else QUADRATIC_PARAMETER

    @property
    def nu(self) -> int:
        return NU


def evaluate_barrier(spec: BarrierSpec, f: float, y: float):
    """Value, gradient and Hessian of the arc barrier at ``(f, y)``."""
    lam = float(spec.cap)
    if not (0.0 < f < lam) or y <= 0.0:
        raise OutOfDomain(f"({f}, {y}) outside the open epigraph")
    value = -math.log(f) - math.log(lam - f)
    gf = -1.0 / f + 1.0 / (lam - f)
    hff = 1.0 / f**2 + 1.0 / (lam - f) ** 2
    if spec.kind == "transport":
        value -= math.log(y)
        return value, np.array([gf, -1.0 / y]), np.array([[hff, 0.0], [0.0, 1.0 / y**2]])
    w = float(spec.weight)
    gs = y - f * f / (2.0 * w)
    if gs <= 0.0:
        raise OutOfDomain(f"y={y} not above f^2/(2w) at f={f}")
    value -= 2.0 * math.log(y) + math.log(gs)
    grad = np.array([gf + f / (w * gs), -2.0 / y - 1.0 / gs])
    hfy = -f / (w * gs**2)
    hess = np.array(
        [
            [hff + 1.0 / (w * gs) + f * f / (w * w * gs * gs), hfy],
            [hfy, 2.0 / y**2 + 1.0 / gs**2],
        ]
    )
    return value, grad, hess


def _barrier_arrays(f, y, gs, cap, winv, quad):
    """Vectorized gradient, Hessian entries and the ``dy``-eliminated curvature.

    The epigraph slack ``gs = y - f^2/(2w)`` is carried as its own state
    variable because recomputing it from ``y`` cancels catastrophically near
    the end of the path.
    """
    lf = cap - f
    gf = -1.0 / f + 1.0 / lf
    hff = 1.0 / f**2 + 1.0 / lf**2
    gy = -1.0 / y
    hyy = 1.0 / y**2
    hfy = np.zeros_like(f)
    heff = hff.copy()
    fq, yq, wq, sq = f[quad], y[quad], winv[quad], gs[quad]
    gf[quad] += fq * wq / sq
    hff[quad] += wq / sq + (fq * wq / sq) ** 2
    gy[quad] = -2.0 / yq - 1.0 / sq
    hyy[quad] = 2.0 / yq**2 + 1.0 / sq**2
    hfy[quad] = -fq * wq / sq**2
    # hff - hfy^2/hyy, rearranged to avoid cancellation
    heff[quad] += wq / sq + 2.0 * (fq * wq) ** 2 / (yq**2 + 2.0 * sq**2)
    return gf, gy, hff, hfy, hyy, heff


def _advance(f, y, gs, df, dy, alpha, winv, quad):
    fn = f + alpha * df
    yn = y + alpha * dy
    gn = gs.copy()
    a_f, a_y = alpha * df[quad], alpha * dy[quad]
    gn[quad] = gs[quad] + a_y - winv[quad] * a_f * (f[quad] + 0.5 * a_f)
    return fn, yn, gn


def _interior(f, y, gs, cap, quad):
    return bool(np.all(f > 0) and np.all(f < cap) and np.all(y > 0) and np.all(gs[quad] > 0))


def _barrier_value(f, y, gs, cap, quad):
    if not _interior(f, y, gs, cap, quad):
        return math.inf
    return float(
        -np.sum(np.log(f)) - np.sum(np.log(cap - f)) - np.sum(np.log(y)) - np.sum(np.log(y[quad]))
        - np.sum(np.log(gs[quad]))
    )


@dataclass
class FirstStageOutput:
    flow: np.ndarray
    masses: np.ndarray
    dual: DualVector
    objective: float
    lower_bound: float
    gap: float
    residual: float
    potentials: np.ndarray
    t: float
    iterations: int
    newton_steps: int
    converged: bool
    trace: list = field(default_factory=list)

    @property
    def objective_history(self) -> list:
        return [row["objective"] for row in self.trace]

    @property
    def monotone(self) -> bool:
        hist = self.objective_history
        return all(b <= a for a, b in zip(hist, hist[1:]))


class _Lifted:
    """Float views of the lift used by the Newton iterations."""

    def __init__(self, g: LiftedGraph, b, weights, delta=DUAL_REGULARIZATION):
        self.g = g
        self.delta = delta
        self.A = g.incidence_matrix.tocsr()
        self.num_nodes = self.A.shape[0]
        self.dense = self.A.toarray() if self.num_nodes <= DENSE_LIMIT else None
        self.b = np.asarray([float(v) for v in b])
        self.quad = g.arc_kind == QUADRATIC
        w = np.asarray([float(x) for x in weights])
        self.w_arc = np.ones(g.num_arcs)
        self.w_arc[self.quad] = w[g.arc_edge[self.quad]]
        self.winv = np.where(self.quad, 1.0 / self.w_arc, 0.0)
        self.w_edge = w

    def q(self, f):
        mu = f[self.quad]
        return float(0.5 * np.sum(mu * mu / self.w_edge))

    def residual(self, f):
        return self.b - self.A @ f

    def lower_bound(self, phi, cap):
        g = self.g
        delta = phi[g.heads] - phi[g.tails]
        lag = float(self.b @ phi)
        lag -= float(np.sum(0.5 * self.w_edge * np.maximum(0.0, delta[self.quad]) ** 2))
        lag -= float(cap * np.sum(np.maximum(0.0, delta[~self.quad])))
        x = phi[: g.n]
        h = g.hypergraph
        s = self.b[: g.n]
        rep = -float(primal_objective(h, s.tolist(), x.tolist())[1])
        return max(lag, rep)

    def factor(self, d, delta=0.0):
        """Factor the scaled KKT system for curvature ``1/d``; return a solver.

        With ``s = sqrt(d)`` and ``B = A diag(s)`` (ground row dropped) the
        system ``[[I, -B^T], [B, delta I]]`` is factored by LU, dense for small
        lifts and sparse otherwise.  Its conditioning is the square root of that
        of the normal equations, and the small dual regularization ``delta``
        keeps potentials bounded between parts of the lift that are joined only
        by nearly empty arcs.  ``solve(c, r)`` returns ``(df, nu)`` with
        ``df / d - A^T nu = c`` and ``A df + delta nu = r``.
        """
        m = self.A.shape[1]
        k = self.num_nodes - 1
        sd = np.sqrt(d)
        # ground the node with the largest conductance so that arcs carrying
        # almost no flow never tie it to the rest of the system
        weight = np.zeros(self.num_nodes)
        np.add.at(weight, self.g.tails, d)
        np.add.at(weight, self.g.heads, d)
        ground = int(np.argmax(weight))
        keep = np.delete(np.arange(self.num_nodes), ground)
        if self.dense is not None:
            B = self.dense[keep] * sd
            K = np.zeros((m + k, m + k))
            K[:m, :m] = np.eye(m)
            K[:m, m:] = -B.T
            K[m:, :m] = B
            K[m:, m:] = delta * np.eye(k)
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fac = lu_factor(K, check_finite=False)
            if not np.all(np.isfinite(fac[0])) or np.min(np.abs(np.diagonal(fac[0]))) == 0.0:
                raise NumericalBreakdown("KKT system singular")

            def inner(rhs):
                return lu_solve(fac, rhs, check_finite=False)

            def apply(z):
                return K @ z

        else:
            B = (self.A[keep] @ sp.diags(sd)).tocsr()
            K = sp.bmat([[sp.identity(m), -B.T], [B, delta * sp.identity(k)]], format="csc")
            try:
                lu = splu(K)
            except RuntimeError as exc:
                raise NumericalBreakdown(f"KKT system singular: {exc}") from exc
            inner = lu.solve

            def apply(z):
                return K @ z

        def solve(c, r):
            rhs = np.concatenate([sd * c, r[keep]])
            z = inner(rhs)
            z = z + inner(rhs - apply(z))
            if not np.all(np.isfinite(z)):
                raise NumericalBreakdown("non-finite Newton direction")
            nu = np.zeros(self.num_nodes)
            nu[keep] = z[m:]
            return sd * z[:m], nu

        return solve

    def project(self, solve, df, r):
        """Correct ``df`` so that ``A df = r`` to working precision.

        The multipliers grow like ``t``, so the direction loses absolute
        accuracy on active arcs; a correction solved from the small leftover
        residual does not.
        """
        zero = np.zeros_like(df)
        for _ in range(2):
            left = r - self.A @ df
            df = df + solve(zero, left)[0]
        return df


def _newton(L: _Lifted, f, y, gs, t, cap, nu_prev):
    """Newton direction; the regularized solve is for the change of ``nu``."""
    gf, gy, hff, hfy, hyy, heff = _barrier_arrays(f, y, gs, cap, L.winv, L.quad)
    gy = gy + t
    geff = gf - hfy * gy / hyy
    r = L.residual(f)
    solve = L.factor(1.0 / heff, L.delta / t)
    df, dnu = solve(L.A.T @ nu_prev - geff, r)
    nu = nu_prev + dnu
    df = L.project(solve, df, r)
    dy = -(gy + hfy * df) / hyy
    dec2 = float(np.sum(heff * df * df) + np.sum(hyy * (dy + hfy * df / hyy) ** 2))
    return df, dy, nu, dec2


def _max_step(f, y, df, dy, cap):
    alpha = 1.0
    neg = df < 0
    if np.any(neg):
        alpha = min(alpha, float(np.min(-f[neg] / df[neg])))
    pos = df > 0
    if np.any(pos):
        alpha = min(alpha, float(np.min((cap - f[pos]) / df[pos])))
    neg = dy < 0
    if np.any(neg):
        alpha = min(alpha, float(np.min(-y[neg] / dy[neg])))
    return alpha


def _center(L: _Lifted, state, t, cap, nu, max_steps=60, tol=1e-7, accept=0.1):
    """Damped Newton centering at fixed ``t``.

    Stops once the Newton decrement falls below ``tol`` or stalls at the
    floating-point noise floor.  When the step budget runs out, the best
    iterate is returned if its decrement is below ``accept``; otherwise None.
    """
    f, y, gs = state
    prev = math.inf
    best = None
    for steps in range(1, max_steps + 1):
        df, dy, nu, dec2 = _newton(L, f, y, gs, t, cap, nu)
        lam = math.sqrt(dec2)
        if best is None or lam < best[0]:
            best = (lam, (f, y, gs), nu)
        if lam <= tol or (lam < 1e-3 and lam > 0.5 * prev):
            return (f, y, gs), nu, steps
        alpha = 1.0 / (1.0 + lam) if lam > 0.25 else 1.0
        alpha = min(alpha, 0.95 * _max_step(f, y, df, dy, cap))
        for _ in range(60):
            fn, yn, gn = _advance(f, y, gs, df, dy, alpha, L.winv, L.quad)
            if _interior(fn, yn, gn, cap, L.quad):
                break
            alpha *= 0.5
        else:
            break
        if alpha < 1e-14:
            break
        f, y, gs = fn, yn, gn
        prev = lam
    if best[0] < accept:
        return best[1], best[2], steps
    return None


def _polish(L: _Lifted, f):
    """Weighted least-squares correction of the node residual."""
    for _ in range(3):
        r = L.residual(f)
        if np.max(np.abs(r)) == 0.0:
            break
        step = L.project(L.factor(np.maximum(f, 1e-300) ** 2), np.zeros_like(f), r)
        fn = f + step
        if np.any(fn <= 0):
            break
        if np.max(np.abs(L.residual(fn))) > np.max(np.abs(r)):
            break
        f = fn
    return f


def solve_first_stage(
    g: LiftedGraph,
    b,
    weights=None,
    epsilon: float = 1e-9,
    feas_tol: float = 1e-10,
    max_outer: int = 400,
    growth: float = 8.0,
    t0: float = 1.0,
    start=None,
) -> FirstStageOutput:
    """Minimize the lifted quadratic flow cost to additive gap ``epsilon``.

    The reported lower bound is the better of the Lagrangian bound of the node
    potentials ``nu / t`` and minus the primal objective at their vertex part;
    both are valid lower bounds on the dual optimum.
    """
    if epsilon <= 0:
        raise InvalidInstance("epsilon must be positive")
    h: Hypergraph = g.hypergraph
    if weights is None:
        weights = h.weights
    if len(b) != g.num_nodes:
        raise InvalidInstance(f"demand has {len(b)} entries, expected {g.num_nodes}")
    if start is None:
        f0, cap = feasible_start(h, list(b[: h.n]), g)
    else:
        f0, cap = start
    L = _Lifted(g, b, weights)
    cap = float(cap)
    f = np.asarray([float(v) for v in f0])
    y = np.ones(g.num_arcs)
    y[L.quad] = 0.5 * f[L.quad] ** 2 * L.winv[L.quad] + 1.0
    gs = np.ones(g.num_arcs)
    state = (f, y, gs)
    short = 1.0 + 1.0 / (8.0 * math.sqrt(NU * g.num_arcs))
    t = t0
    trace = []
    newton_total = 0
    best = None
    centered = _center(L, state, t, cap, np.zeros(g.num_nodes), max_steps=5000)
    if centered is None:
        raise NumericalBreakdown("initial centering failed")
    state, nu, k = centered
    f = state[0]
    newton_total += k
    outer = 0
    factor = growth
    while True:
        outer += 1
        phi = nu / t
        q = L.q(f)
        lb = L.lower_bound(phi, cap)
        res = float(np.max(np.abs(L.residual(f))))
        gap = q - lb
        row = {"iteration": outer, "t": t, "objective": q, "lower_bound": lb, "gap": gap, "residual": res}
        trace.append(row)
        logger.debug("iter=%d t=%.3e objective=%.12g residual=%.2e gap=%.3e", outer, t, q, res, gap)
        if best is None or gap < best[0]:
            best = (gap, f.copy(), phi.copy(), t, lb)
        if gap <= epsilon and res <= feas_tol:
            break
        if outer >= max_outer:
            out = _finish(L, g, best[1], best[2], cap, best[3], outer, newton_total, trace, False)
            raise MaxIterations(f"gap {out.gap:.3e} above {epsilon:.3e} after {outer} iterations", out)
        tn = t * factor
        centered = _center(L, state, tn, cap, nu * factor)
        if centered is None and factor != short:
            factor = short
            tn = t * factor
            centered = _center(L, state, tn, cap, nu * factor)
        if centered is None:
            out = _finish(L, g, best[1], best[2], cap, best[3], outer, newton_total, trace, False)
            raise NumericalBreakdown(f"centering failed at t={tn:.3e}; best gap {out.gap:.3e}")
        state, nu, k = centered
        f = state[0]
        newton_total += k
        t = tn
    out = _finish(L, g, f, phi, cap, t, outer, newton_total, trace, True)
    if out.gap > epsilon or out.residual > feas_tol:
        out.converged = False
    return out


def _finish(L, g, f, phi, cap, t, outer, newton_total, trace, converged):
    f = _polish(L, f)
    q = L.q(f)
    lb = L.lower_bound(phi, cap)
    res = float(np.max(np.abs(L.residual(f))))
    return FirstStageOutput(
        flow=f,
        masses=f[L.quad].copy(),
        dual=induced_dual(g, f),
        objective=q,
        lower_bound=lb,
        gap=q - lb,
        residual=res,
        potentials=phi,
        t=t,
        iterations=outer,
        newton_steps=newton_total,
        converged=converged,
        trace=trace,
    )


__all__ = [
    "BarrierSpec",
    "FirstStageOutput",
    "evaluate_barrier",
    "solve_first_stage",
    "TRANSPORT",
    "QUADRATIC",
]
