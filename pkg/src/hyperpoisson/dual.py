"""Edge-local dual vectors, the Fenchel dual objective and mass/split maps."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Hypergraph, as_fraction
from .errors import InvariantViolation, NotZeroSumOnEdge


@dataclass(frozen=True)
class DualVector:
    """One vector per hyperedge, listed in the vertex order of that edge.

    ``exact`` marks rational mode (entries are Fractions); otherwise floats.
    """

    values: tuple
    exact: bool = True

    @classmethod
    def from_lists(cls, values, exact: bool = True) -> "DualVector":
        conv = as_fraction if exact else float
        return cls(tuple(tuple(conv(v) for v in ve) for ve in values), exact)

    @classmethod
    def zeros(cls, h: Hypergraph, exact: bool = True) -> "DualVector":
        z = Fraction(0) if exact else 0.0
        return cls(tuple((z,) * len(e) for e in h.edges), exact)

    def to_exact(self) -> "DualVector":
        return self if self.exact else DualVector.from_lists(self.values, True)

    def to_float(self) -> "DualVector":
        return DualVector(tuple(tuple(float(v) for v in ve) for ve in self.values), False)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TransportSplit:
    p: tuple
    n: tuple
    mu: tuple


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    edge_sums: tuple
    vertex_residuals: tuple
    max_residual: float
    bad_edges: tuple
    bad_vertices: tuple


def _check_shape(h: Hypergraph, eta: DualVector):
    if len(eta.values) != h.num_edges or any(
        len(ve) != len(e) for ve, e in zip(eta.values, h.edges)
    ):
        raise InvariantViolation("dual vector does not match the hyperedge layout")


def apply_B(h: Hypergraph, eta: DualVector) -> list:
    """Aggregate ``B eta = sum_e eta_e`` as a per-vertex list."""
    _check_shape(h, eta)
    out = [Fraction(0) if eta.exact else 0.0 for _ in range(h.n)]
    for e, ve in zip(h.edges, eta.values):
        for v, a in zip(e, ve):
            out[v] += a
    return out


def _l1(ve):
    return sum(abs(a) for a in ve)


def dual_objective(h: Hypergraph, eta: DualVector, strict: bool = True):
    """``sum_e |eta_e|_1^2 / (8 w_e)``.

    In strict mode an exact ``eta`` whose edge block does not sum to zero raises
    :class:`NotZeroSumOnEdge`.
    """
    _check_shape(h, eta)
    if strict and eta.exact:
        for i, ve in enumerate(eta.values):
            if sum(ve) != 0:
                raise NotZeroSumOnEdge(f"edge {i} block sums to {sum(ve)}")
    ws = h.weight_fractions if eta.exact else [float(w) for w in h.weights]
    return sum(_l1(ve) ** 2 / (8 * w) for ve, w in zip(eta.values, ws))


def check_dual_feasible(h: Hypergraph, s: Sequence, eta: DualVector, tol: float = 1e-9) -> FeasibilityReport:
    _check_shape(h, eta)
    sums = tuple(sum(ve) for ve in eta.values)
    agg = apply_B(h, eta)
    if eta.exact:
        sv = [as_fraction(v) for v in s]
        res = tuple(a - b for a, b in zip(sv, agg))
        bad_e = tuple(i for i, x in enumerate(sums) if x != 0)
        bad_v = tuple(v for v, x in enumerate(res) if x != 0)
    else:
        sv = [float(v) for v in s]
        res = tuple(a - b for a, b in zip(sv, agg))
        bad_e = tuple(i for i, x in enumerate(sums) if abs(x) > tol)
        bad_v = tuple(v for v, x in enumerate(res) if abs(x) > tol)
    mx = max([abs(float(x)) for x in sums] + [abs(float(x)) for x in res], default=0.0)
    return FeasibilityReport(not bad_e and not bad_v, sums, res, mx, bad_e, bad_v)


def mass_of(eta: DualVector) -> tuple:
    return tuple(_l1(ve) / 2 for ve in eta.values)


def quadratic_mass_objective(h: Hypergraph, mu: Sequence, exact: bool | None = None):
    if exact is None:
        exact = all(isinstance(m, (Fraction, int)) for m in mu)
    ws = h.weight_fractions if exact else [float(w) for w in h.weights]
    if any(m < 0 for m in mu):
        raise InvariantViolation("masses must be nonnegative")
    return sum(m * m / w for m, w in zip(mu, ws)) / 2


def dual_to_split(eta: DualVector) -> TransportSplit:
    zero = Fraction(0) if eta.exact else 0.0
    for i, ve in enumerate(eta.values):
        if eta.exact and sum(ve) != 0:
            raise InvariantViolation(f"edge {i} block is not zero-sum")
    p = tuple(tuple(a if a > 0 else zero for a in ve) for ve in eta.values)
    n = tuple(tuple(-a if a < 0 else zero for a in ve) for ve in eta.values)
    return TransportSplit(p, n, mass_of(eta))


def split_to_dual(split: TransportSplit, exact: bool = True, tol: float = 1e-9) -> DualVector:
    for i, (pe, ne, m) in enumerate(zip(split.p, split.n, split.mu)):
        if any(a < 0 for a in pe) or any(a < 0 for a in ne) or m < 0:
            raise InvariantViolation(f"negative transport data on edge {i}")
        if exact:
            if sum(pe) != m or sum(ne) != m:
                raise InvariantViolation(f"edge {i}: transport sums differ from mass")
        elif abs(sum(pe) - m) > tol or abs(sum(ne) - m) > tol:
            raise InvariantViolation(f"edge {i}: transport sums differ from mass")
    return DualVector(
        tuple(tuple(a - b for a, b in zip(pe, ne)) for pe, ne in zip(split.p, split.n)), exact
    )
