"""Regularized Poisson problems through a ground vertex; resolvents and responses."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .certificate import DEFAULT_GAMMA, GapReport
from .core import Dyadic, Hypergraph, as_demand, energy
from .dual import DualVector, apply_B, dual_objective
from .errors import InvalidInstance, NonpositiveLambda, VerificationError, ZeroDegreeVertex
from .recovery import DEFAULT_GRID_BITS
from .solver import DEFAULT_EPSILON, PoissonResult, solve_poisson


@dataclass(frozen=True)
class RegularizedInstance:
    """Base instance plus its grounded augmentation.

    The augmented hypergraph has the extra vertex ``ground = n`` and, after
    the base edges, one edge ``{v, ground}`` of weight ``lam * d_v`` per vertex.
    """

    base: Hypergraph
    lam: Fraction
    demand: tuple
    augmented: Hypergraph
    augmented_demand: tuple

    @property
    def ground(self) -> int:
        return self.base.n


def _lambda(lam) -> Fraction:
    value = Dyadic.from_value(lam).to_fraction()
    if value <= 0:
        raise NonpositiveLambda(f"lambda must be positive, got {value}")
    return value


def ground_augment(h: Hypergraph, lam, s: Sequence) -> RegularizedInstance:
    lam = _lambda(lam)
    demand = as_demand(s, h.n)
    d = h.degrees
    for v, dv in enumerate(d):
        if dv <= 0:
            raise ZeroDegreeVertex(f"vertex {v} has zero degree")
    g = h.n
    edges = list(h.edges) + [(v, g) for v in range(h.n)]
    weights = list(h.weight_fractions) + [lam * dv for dv in d]
    aug = Hypergraph(h.n + 1, edges, weights)
    return RegularizedInstance(h, lam, demand, aug, demand + (-sum(demand),))


def regularized_primal_objective(h: Hypergraph, lam, s: Sequence, x: Sequence):
    """``E(x) + (lam/2) x'Dx - <s, x>``; exact for rational ``x``."""
    lam = _lambda(lam)
    exact = all(isinstance(v, (int, Fraction)) for v in x)
    conv = Fraction if exact else float
    x = [conv(v) for v in x]
    d = [conv(v) for v in h.degrees]
    s = [conv(v) for v in as_demand(s, h.n)]
    lam = conv(lam)
    quad = sum(dv * xv * xv for dv, xv in zip(d, x))
    return energy(h, x) + lam * quad / 2 - sum(a * b for a, b in zip(s, x))


def regularized_dual_objective(h: Hypergraph, lam, s: Sequence, eta: DualVector):
    """Return ``(D_lam(eta), x)`` with ``x_v = (s_v - (B eta)_v) / (lam d_v)``."""
    lam = _lambda(lam)
    demand = as_demand(s, h.n)
    base = dual_objective(h, eta)
    agg = apply_B(h, eta)
    if eta.exact:
        res = [a - b for a, b in zip(demand, agg)]
        d = h.degrees
    else:
        res = [float(a) - b for a, b in zip(demand, agg)]
        d = [float(v) for v in h.degrees]
        lam = float(lam)
    value = base + sum(r * r / dv for r, dv in zip(res, d)) / (2 * lam)
    x = tuple(r / (lam * dv) for r, dv in zip(res, d))
    return value, x


def augment_certificate(inst: RegularizedInstance, eta: DualVector) -> DualVector:
    """Rebuild the ground-edge blocks ``(s_v - (B eta)_v)(e_v - e_g)``."""
    agg = apply_B(inst.base, eta)
    extra = []
    for v in range(inst.base.n):
        a = inst.demand[v] - agg[v]
        extra.append((a, -a))
    return DualVector(tuple(eta.values) + tuple(extra), eta.exact)


@dataclass(frozen=True)
class RegularizedResult:
    x: tuple
    eta: DualVector
    report: GapReport
    instance: RegularizedInstance
    poisson: PoissonResult | None

    @property
    def gap(self) -> Fraction:
        return self.report.gap


def certify_regularized(h: Hypergraph, lam, s: Sequence, x: Sequence, eta: DualVector) -> GapReport:
    """Exact ``P_lam(x) + D_lam(eta)``; needs every block of ``eta`` zero-sum."""
    if not eta.exact:
        raise VerificationError("certificate must be in exact mode")
    if len(eta.values) != h.num_edges:
        raise VerificationError("certificate does not match the hyperedge count")
    for i, (e, ve) in enumerate(zip(h.edges, eta.values)):
        if len(ve) != len(e):
            raise VerificationError(f"certificate block {i} has the wrong length")
        if sum(ve) != 0:
            raise VerificationError(f"eta_{i} does not sum to zero on its edge")
    x = tuple(Fraction(v) for v in x)
    primal = regularized_primal_objective(h, lam, s, x)
    dual, _ = regularized_dual_objective(h, lam, s, eta)
    gap = primal + dual
    if gap < 0:
        raise VerificationError(f"negative primal-dual gap {gap}")
    att = {"edge_blocks_zero_sum": True, "gap_nonnegative": True}
    return GapReport(primal, dual, gap, att)


def solve_regularized(h: Hypergraph, lam, s: Sequence, epsilon: float = DEFAULT_EPSILON,
                      grid_bits: int = DEFAULT_GRID_BITS, gamma=DEFAULT_GAMMA, **kwargs) -> RegularizedResult:
    """Minimize ``E(x) + (lam/2) x'Dx - <s, x>`` over all potentials.

    Runs the Poisson pipeline on the grounded instance, shifts the result so
    the ground potential is zero and keeps the base-edge dual blocks.
    """
    inst = ground_augment(h, lam, s)
    if all(v == 0 for v in inst.demand):
        x = (Fraction(0),) * h.n
        eta = DualVector.zeros(h)
        return RegularizedResult(x, eta, certify_regularized(h, inst.lam, inst.demand, x, eta), inst, None)
    res = solve_poisson(inst.augmented, inst.augmented_demand, epsilon=epsilon, grid_bits=grid_bits,
                        gamma=gamma, **kwargs)
    xg = res.x[inst.ground]
    x = tuple(v - xg for v in res.x[: h.n])
    eta = DualVector(tuple(res.certificate.eta.values[: h.num_edges]), True)
    report = certify_regularized(h, inst.lam, inst.demand, x, eta)
    if report.gap != res.report.gap:
        raise VerificationError("regularized gap differs from the grounded gap")
    return RegularizedResult(x, eta, report, inst, res)


def resolvent(h: Hypergraph, lam, y: Sequence, **kwargs) -> RegularizedResult:
    """Approximate ``argmin_x E(x) + (lam/2) |x - y|_D^2`` with a certified gap."""
    lam = _lambda(lam)
    y = as_demand(y, h.n)
    s = tuple(lam * dv * yv for dv, yv in zip(h.degrees, y))
    return solve_regularized(h, lam, s, **kwargs)


@dataclass(frozen=True)
class PairwiseResponse:
    value: Fraction
    gap: Fraction
    result: PoissonResult


def pairwise_response(h: Hypergraph, u: int, v: int, **kwargs) -> PairwiseResponse:
    """``x_u - x_v`` for the Poisson solution with demand ``e_u - e_v``.

    Only the objective gap of the run is certified; no error bound on the
    response itself is claimed.
    """
    if u == v:
        raise InvalidInstance("response needs two distinct vertices")
    for a in (u, v):
        if not 0 <= a < h.n:
            raise InvalidInstance(f"vertex {a} outside [0, {h.n})")
    s = [0] * h.n
    s[u] = 1
    s[v] = -1
    res = solve_poisson(h, s, **kwargs)
    return PairwiseResponse(res.x[u] - res.x[v], res.report.gap, res)
