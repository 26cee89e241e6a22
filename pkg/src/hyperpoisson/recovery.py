"""Primal recovery: mass rounding, the exact support min-cost flow, potentials."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Hypergraph, as_demand, edge_range, project_to_weighted_mean_zero
from .errors import CapacityMultiplierNonzero, InvalidInstance, InvariantViolation
from .lifted import LiftedGraph, build_lifted_graph
from .mcf import (
    MCFInstance,
    MCFSolution,
    PotentialCertificate,
    extract_residual_potentials,
    solve_mcf_exact,
)

DEFAULT_GRID_BITS = 20
TAU_EXTRA_BITS = 10


def grid(bits: int) -> Fraction:
    return Fraction(1, 1 << bits)


def default_tau(rho: Fraction) -> Fraction:
    return rho / (1 << TAU_EXTRA_BITS)


def _ceil_div(a: Fraction, b: Fraction) -> int:
    return math.ceil(a / b)


def round_budgets(mu: Sequence, weights: Sequence, rho: Fraction, tau: Fraction) -> tuple:
    """``r_e = rho * ceil((max(0, mu_e) + tau) / (w_e rho))`` in exact arithmetic."""
    rho = Fraction(rho)
    tau = Fraction(tau)
    if rho <= 0 or tau <= 0:
        raise InvalidInstance("rho and tau must be positive")
    out = []
    for m, w in zip(mu, weights):
        up = max(Fraction(0), Fraction(m)) + tau
        out.append(rho * _ceil_div(up / Fraction(w), rho))
    return tuple(out)


def round_demand(s: Sequence, rho: Fraction) -> tuple:
    """Nearest multiples of ``rho`` (ties to even); vertex 0 absorbs the residue."""
    rho = Fraction(rho)
    s = [Fraction(v) for v in s]
    if sum(s) != 0:
        raise InvalidInstance("demand must sum to zero")
    hat = [rho * round(v / rho) for v in s]
    if hat:
        hat[0] = -sum(hat[1:])
    return tuple(hat)


@dataclass(frozen=True)
class SupportInstance:
    hypergraph: Hypergraph
    budgets: tuple
    demand: tuple
    rho: Fraction
    capacity: Fraction
    mcf: MCFInstance
    lifted: LiftedGraph


@dataclass(frozen=True)
class SupportResult:
    value: Fraction
    potentials: tuple
    x: tuple
    instance: SupportInstance
    solution: MCFSolution
    certificate: PotentialCertificate


def build_support_instance(h: Hypergraph, s_hat: Sequence, budgets: Sequence, rho: Fraction,
                           g: LiftedGraph | None = None) -> SupportInstance:
    """Scale the support flow problem by ``1/rho`` into an integral MCF instance.

    Costs are the budgets on quadratic arcs and zero on transport arcs; every
    arc gets capacity ``|s_hat|_1 + rho``.
    """
    g = g or build_lifted_graph(h)
    rho = Fraction(rho)
    s_hat = tuple(Fraction(v) for v in s_hat)
    budgets = tuple(Fraction(r) for r in budgets)
    if len(s_hat) != h.n or len(budgets) != h.num_edges:
        raise InvalidInstance("support data does not match the hypergraph")
    if sum(s_hat) != 0:
        raise InvalidInstance("rounded demand must sum to zero")
    scaled = []
    for v in list(s_hat) + list(budgets):
        q = v / rho
        if q.denominator != 1:
            raise InvalidInstance(f"{v} is not on the grid {rho}")
        scaled.append(int(q))
    if any(r < 0 for r in budgets):
        raise InvalidInstance("budgets must be nonnegative")
    dem = scaled[: h.n] + [0] * (2 * h.num_edges)
    r_int = scaled[h.n :]
    cap = sum(abs(v) for v in s_hat) + rho
    cap_int = int(cap / rho)
    cost = [0] * g.num_arcs
    for e in range(h.num_edges):
        cost[g.quad_arc(e)] = r_int[e]
    inst = MCFInstance(
        g.num_nodes,
        tuple(int(t) for t in g.tails),
        tuple(int(x) for x in g.heads),
        tuple(dem),
        (cap_int,) * g.num_arcs,
        tuple(cost),
    )
    return SupportInstance(h, budgets, s_hat, rho, cap, inst, g)


def solve_support(h: Hypergraph, s_hat: Sequence, budgets: Sequence, rho: Fraction,
                  g: LiftedGraph | None = None) -> SupportResult:
    """Exact support value ``max <s_hat, x>`` over ``R_e(x) <= r_e`` and a maximizer."""
    sup = build_support_instance(h, s_hat, budgets, rho, g)
    sol = solve_mcf_exact(sup.mcf)
    cert = extract_residual_potentials(sup.mcf, sol)
    if any(cert.lambda_plus):
        raise CapacityMultiplierNonzero("capacity multipliers must vanish on the slack support instance")
    rho = sup.rho
    value = rho * rho * sol.objective
    pot = tuple(rho * p for p in cert.potentials)
    x = project_to_weighted_mean_zero(h, pot[: h.n])
    for e, r in zip(h.edges, sup.budgets):
        if edge_range(x, e) > r:
            raise InvariantViolation(f"support maximizer exceeds budget on edge {e}")
    if sum(a * b for a, b in zip(sup.demand, x)) != value:
        raise InvariantViolation("support maximizer does not attain the flow value")
    return SupportResult(value, pot, x, sup, sol, cert)


@dataclass(frozen=True)
class RecoveryResult:
    x: tuple
    budgets: tuple
    demand_hat: tuple
    support: SupportResult
    rho: Fraction
    tau: Fraction

    @property
    def value(self) -> Fraction:
        return self.support.value


def recover_primal(h: Hypergraph, s: Sequence, masses: Sequence, rho: Fraction | None = None,
                   tau: Fraction | None = None, g: LiftedGraph | None = None) -> RecoveryResult:
    """Round stage-1 masses to budgets and read the primal point off the support flow."""
    rho = Fraction(rho) if rho is not None else grid(DEFAULT_GRID_BITS)
    tau = Fraction(tau) if tau is not None else default_tau(rho)
    demand = as_demand(s, h.n)
    masses = [Fraction(float(m)) for m in masses]
    budgets = round_budgets(masses, h.weight_fractions, rho, tau)
    s_hat = round_demand(demand, rho)
    sup = solve_support(h, s_hat, budgets, rho, g)
    return RecoveryResult(sup.x, budgets, s_hat, sup, rho, tau)
