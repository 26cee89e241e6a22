"""Exact dual certificates: quantize, repair, and report the primal-dual gap."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .core import Hypergraph, as_demand, energy, is_dyadic, is_normalized, overlap_tree, primal_objective
from .dual import DualVector, apply_B, dual_objective
from .errors import InvariantViolation, NonDyadic, NotConnected, VerificationError

DEFAULT_GAMMA = Fraction(1, 1 << 30)


@dataclass(frozen=True)
class DualCertificate:
    eta: DualVector
    representatives: tuple
    transfers: tuple
    grid_bits: int
    quantized: DualVector

    def check(self, h: Hypergraph, s: Sequence) -> None:
        check_certificate(h, s, self.eta)


def quantization_bits(h: Hypergraph, gamma) -> int:
    """Smallest ``k`` with ``2^-k <= gamma * 2^-20 / (P + 1)^2``."""
    theta = Fraction(gamma) / (1 << 20) / (h.incidence_size + 1) ** 2
    k = max(0, math.ceil(-math.log2(theta)))
    while Fraction(1, 1 << k) > theta:
        k += 1
    return k


def _quantize(v, k: int) -> Fraction:
    return Fraction(round(Fraction(v) * (1 << k)), 1 << k)


def check_certificate(h: Hypergraph, s: Sequence, eta: DualVector) -> None:
    """Raise :class:`VerificationError` unless every block is zero-sum and ``B eta = s``."""
    if not eta.exact:
        raise VerificationError("certificate must be in exact mode")
    if len(eta.values) != h.num_edges:
        raise VerificationError("certificate does not match the hyperedge count")
    for i, (e, ve) in enumerate(zip(h.edges, eta.values)):
        if len(ve) != len(e):
            raise VerificationError(f"certificate block {i} has the wrong length")
        if sum(ve) != 0:
            raise VerificationError(f"eta_{i} does not sum to zero on its edge")
    agg = apply_B(h, eta)
    for v, (a, b) in enumerate(zip(agg, as_demand(s, h.n))):
        if a != b:
            raise VerificationError(f"B·η̂ ≠ s at vertex {v}")


def repair_dual_certificate(h: Hypergraph, s: Sequence, raw: DualVector, gamma=DEFAULT_GAMMA) -> DualCertificate:
    """Turn an approximately feasible dual into an exactly feasible dyadic one.

    Coordinates are quantized to the grid ``2^-k``; each block is made
    zero-sum by overwriting its smallest-id vertex; the remaining demand
    mismatch is routed along the BFS tree of the vertex-overlap graph.
    """
    demand = as_demand(s, h.n)
    if any(not is_dyadic(v) for v in demand):
        raise NonDyadic("demand must be dyadic")
    tree = overlap_tree(h)
    if not tree.connected:
        raise NotConnected("certificate repair needs a connected hypergraph")
    k = quantization_bits(h, gamma)
    quant = [[_quantize(v, k) for v in ve] for ve in raw.values]
    quantized = DualVector(tuple(tuple(b) for b in quant), True)
    reps = []
    for e, block in zip(h.edges, quant):
        j = min(range(len(e)), key=lambda i: e[i])
        reps.append(e[j])
        block[j] = -(sum(block) - block[j])
    bar = DualVector(tuple(tuple(b) for b in quant), True)
    agg = apply_B(h, bar)
    delta = [a - b for a, b in zip(demand, agg)]
    sub = list(delta)
    for v in reversed(tree.order):
        p = tree.parent[v]
        if p >= 0:
            sub[p] += sub[v]
    pos = [dict((u, j) for j, u in enumerate(e)) for e in h.edges]
    transfers = []
    for v in tree.order:
        p = tree.parent[v]
        if p < 0 or sub[v] == 0:
            continue
        e = tree.parent_edge[v]
        quant[e][pos[e][v]] += sub[v]
        quant[e][pos[e][p]] -= sub[v]
        transfers.append((v, p, e, sub[v]))
    eta = DualVector(tuple(tuple(b) for b in quant), True)
    check_certificate(h, demand, eta)
    return DualCertificate(eta, tuple(reps), tuple(transfers), k, quantized)


@dataclass(frozen=True)
class GapReport:
    primal: Fraction
    dual: Fraction
    gap: Fraction
    attestations: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.gap >= 0 and all(self.attestations.values())


def certify_pair(h: Hypergraph, s: Sequence, x: Sequence, cert) -> GapReport:
    """Exact ``P(x) + D(eta)``; weak duality makes it nonnegative."""
    eta = cert.eta if isinstance(cert, DualCertificate) else cert
    demand = as_demand(s, h.n)
    x = tuple(Fraction(v) for v in x)
    check_certificate(h, demand, eta)
    _, primal = primal_objective(h, demand, x)
    dual = dual_objective(h, eta)
    gap = primal + dual
    att = {
        "edge_blocks_zero_sum": True,
        "aggregation_matches_demand": True,
        "potential_normalized": is_normalized(h, x),
        "gap_nonnegative": gap >= 0,
    }
    if gap < 0:
        raise VerificationError(f"negative primal-dual gap {gap}")
    return GapReport(primal, dual, gap, att)


def bregman_gap(h: Hypergraph, s: Sequence, x: Sequence, x_star: Sequence, xi_star: Sequence):
    """``E(x) - E(x*) - <xi*, x - x*>``, checked against ``P(x) - P(x*)``.

    Exact when all inputs are rational; the identity needs ``x, x*`` in the
    normalized subspace and ``s - xi*`` parallel to the degree vector.
    """
    exact = all(isinstance(v, (int, Fraction)) for v in list(x) + list(x_star) + list(xi_star))
    conv = Fraction if exact else float
    x = [conv(v) for v in x]
    xs = [conv(v) for v in x_star]
    xi = [conv(v) for v in xi_star]
    sv = [conv(v) for v in as_demand(s, h.n)]
    value = energy(h, x) - energy(h, xs) - sum(a * (b - c) for a, b, c in zip(xi, x, xs))
    diff = primal_objective(h, sv, x)[1] - primal_objective(h, sv, xs)[1]
    if exact:
        if value != diff:
            raise InvariantViolation("Bregman gap differs from the objective gap")
    elif not math.isclose(value, diff, rel_tol=1e-9, abs_tol=1e-9):
        raise InvariantViolation("Bregman gap differs from the objective gap")
    return value
