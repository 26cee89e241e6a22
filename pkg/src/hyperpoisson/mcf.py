"""Exact integral min-cost flow with node-potential certificates.

Demands follow the inflow-minus-outflow convention: ``b_u < 0`` is a source,
``b_u > 0`` a sink.  All arithmetic is on Python integers.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from .errors import Infeasible, InvalidInstance, InvariantViolation, NegativeCycleDetected


@dataclass(frozen=True)
class MCFInstance:
    num_nodes: int
    tails: tuple
    heads: tuple
    demand: tuple
    capacity: tuple
    cost: tuple

    def __post_init__(self):
        m = len(self.tails)
        for name in ("heads", "capacity", "cost"):
            if len(getattr(self, name)) != m:
                raise InvalidInstance(f"{name} has {len(getattr(self, name))} entries, expected {m}")
        if len(self.demand) != self.num_nodes:
            raise InvalidInstance("demand length differs from the node count")
        for field_name in ("tails", "heads", "demand", "capacity", "cost"):
            vals = tuple(getattr(self, field_name))
            if any(not isinstance(v, int) or isinstance(v, bool) for v in vals):
                raise InvalidInstance(f"{field_name} must hold integers")
            object.__setattr__(self, field_name, vals)
        if sum(self.demand) != 0:
            raise InvalidInstance("demands must sum to zero")
        if any(u < 0 for u in self.capacity):
            raise InvalidInstance("capacities must be nonnegative")
        if any(c < 0 for c in self.cost):
            raise InvalidInstance("costs must be nonnegative")
        for a in range(m):
            if not (0 <= self.tails[a] < self.num_nodes and 0 <= self.heads[a] < self.num_nodes):
                raise InvalidInstance(f"arc {a} has an endpoint outside the node range")

    @property
    def num_arcs(self) -> int:
        return len(self.tails)


@dataclass(frozen=True)
class MCFSolution:
    flow: tuple
    objective: int
    status: str = "optimal"


@dataclass(frozen=True)
class PotentialCertificate:
    potentials: tuple
    lambda_plus: tuple

    def slack(self, inst: MCFInstance) -> tuple:
        """Reduced costs ``sigma_a = c_a - (pi_head - pi_tail) + lambda_a``."""
        p = self.potentials
        return tuple(
            inst.cost[a] - (p[inst.heads[a]] - p[inst.tails[a]]) + self.lambda_plus[a]
            for a in range(inst.num_arcs)
        )

    def dual_objective(self, inst: MCFInstance) -> int:
        return sum(b * p for b, p in zip(inst.demand, self.potentials)) - sum(
            u * lam for u, lam in zip(inst.capacity, self.lambda_plus)
        )


def flow_objective(inst: MCFInstance, flow: Sequence[int]) -> int:
    return sum(c * f for c, f in zip(inst.cost, flow))


def check_flow(inst: MCFInstance, flow: Sequence[int]) -> None:
    """Raise :class:`InvariantViolation` unless ``flow`` is feasible."""
    if len(flow) != inst.num_arcs:
        raise InvariantViolation("flow length differs from the arc count")
    bal = [0] * inst.num_nodes
    for a, f in enumerate(flow):
        if not 0 <= f <= inst.capacity[a]:
            raise InvariantViolation(f"arc {a} carries {f} outside [0, {inst.capacity[a]}]")
        bal[inst.heads[a]] += f
        bal[inst.tails[a]] -= f
    for u, (x, b) in enumerate(zip(bal, inst.demand)):
        if x != b:
            raise InvariantViolation(f"node {u} has imbalance {x}, demand {b}")


class _Residual:
    """Residual graph; edge ``2a`` is arc ``a`` forward, ``2a + 1`` backward."""

    def __init__(self, num_nodes, tails, heads, cap, cost, flow):
        self.n = num_nodes
        self.to = []
        self.cost = []
        self.res = []
        self.adj = [[] for _ in range(num_nodes)]
        for a, (t, h) in enumerate(zip(tails, heads)):
            self.to += [h, t]
            self.cost += [cost[a], -cost[a]]
            self.res += [cap[a] - flow[a], flow[a]]
            self.adj[t].append(2 * a)
            self.adj[h].append(2 * a + 1)
        for lst in self.adj:
            lst.sort()

    def push(self, edge, amount):
        self.res[edge] -= amount
        self.res[edge ^ 1] += amount


def solve_mcf_exact(inst: MCFInstance) -> MCFSolution:
    """Successive shortest paths with Dijkstra on Johnson-reduced costs.

    Ties are broken toward the lowest arc index.  Raises :class:`Infeasible`
    when the demand cannot be routed within the capacities.
    """
    n, m = inst.num_nodes, inst.num_arcs
    src, snk = n, n + 1
    tails = list(inst.tails)
    heads = list(inst.heads)
    cap = list(inst.capacity)
    cost = list(inst.cost)
    need = 0
    for u, b in enumerate(inst.demand):
        if b < 0:
            tails.append(src), heads.append(u), cap.append(-b), cost.append(0)
        elif b > 0:
            tails.append(u), heads.append(snk), cap.append(b), cost.append(0)
            need += b
    R = _Residual(n + 2, tails, heads, cap, cost, [0] * len(tails))
    pot = [0] * (n + 2)
    sent = 0
    while sent < need:
        dist = [None] * (n + 2)
        pred = [-1] * (n + 2)
        dist[src] = 0
        heap = [(0, src)]
        done = [False] * (n + 2)
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for e in R.adj[u]:
                if R.res[e] <= 0:
                    continue
                v = R.to[e]
                nd = d + R.cost[e] + pot[u] - pot[v]
                if dist[v] is None or nd < dist[v] or (nd == dist[v] and not done[v] and e < pred[v]):
                    dist[v] = nd
                    pred[v] = e
                    heapq.heappush(heap, (nd, v))
        if dist[snk] is None:
            raise Infeasible(f"only {sent} of {need} demand units can be routed")
        dt = dist[snk]
        for v in range(n + 2):
            pot[v] += dist[v] if dist[v] is not None and dist[v] < dt else dt
        bottleneck = need - sent
        v = snk
        while v != src:
            e = pred[v]
            bottleneck = min(bottleneck, R.res[e])
            v = R.to[e ^ 1]
        v = snk
        while v != src:
            e = pred[v]
            R.push(e, bottleneck)
            v = R.to[e ^ 1]
        sent += bottleneck
    flow = tuple(R.res[2 * a + 1] for a in range(m))
    return MCFSolution(flow, flow_objective(inst, flow))


def _find_cycle(num_nodes, tails, heads, flow):
    """Return the arc list of a directed cycle in the flow support, or None."""
    out = [[] for _ in range(num_nodes)]
    for a, f in enumerate(flow):
        if f > 0:
            out[tails[a]].append(a)
    state = [0] * num_nodes
    parent_arc = [-1] * num_nodes
    for root in range(num_nodes):
        if state[root]:
            continue
        stack = [(root, 0)]
        state[root] = 1
        while stack:
            u, i = stack[-1]
            if i < len(out[u]):
                stack[-1] = (u, i + 1)
                a = out[u][i]
                v = heads[a]
                if state[v] == 0:
                    state[v] = 1
                    parent_arc[v] = a
                    stack.append((v, 0))
                elif state[v] == 1:
                    cyc = [a]
                    w = u
                    while w != v:
                        b = parent_arc[w]
                        cyc.append(b)
                        w = tails[b]
                    return cyc[::-1]
            else:
                state[u] = 2
                stack.pop()
    return None


def make_acyclic(inst: MCFInstance, sol: MCFSolution) -> MCFSolution:
    """Cancel directed cycles in the support of a feasible flow.

    With nonnegative costs the objective never increases, and the result
    decomposes into source-sink paths, so no arc carries more than half the
    total absolute demand.
    """
    check_flow(inst, sol.flow)
    flow = list(sol.flow)
    while True:
        cyc = _find_cycle(inst.num_nodes, inst.tails, inst.heads, flow)
        if cyc is None:
            break
        amount = min(flow[a] for a in cyc)
        for a in cyc:
            flow[a] -= amount
    flow = tuple(flow)
    obj = flow_objective(inst, flow)
    if obj > sol.objective:
        raise InvariantViolation("cycle cancellation increased the objective")
    return MCFSolution(flow, obj, sol.status)


def extract_residual_potentials(inst: MCFInstance, sol: MCFSolution) -> PotentialCertificate:
    """Bellman-Ford potentials on the residual graph of an optimal flow.

    A zero-cost super-source reaches every node; potentials are the shortest
    distances shifted so that the minimum is zero.  A negative residual cycle
    means ``sol`` is not optimal and raises :class:`NegativeCycleDetected`.
    """
    check_flow(inst, sol.flow)
    n = inst.num_nodes
    edges = []
    for a in range(inst.num_arcs):
        t, h, c, f = inst.tails[a], inst.heads[a], inst.cost[a], sol.flow[a]
        if f < inst.capacity[a]:
            edges.append((t, h, c))
        if f > 0:
            edges.append((h, t, -c))
    dist = [0] * n
    for it in range(n + 1):
        changed = False
        for t, h, c in edges:
            if dist[t] + c < dist[h]:
                dist[h] = dist[t] + c
                changed = True
        if not changed:
            break
    else:
        raise NegativeCycleDetected("residual graph has a negative-cost cycle; the flow is not optimal")
    low = min(dist) if dist else 0
    pot = tuple(d - low for d in dist)
    lam = tuple(
        max(0, pot[inst.heads[a]] - pot[inst.tails[a]] - inst.cost[a]) for a in range(inst.num_arcs)
    )
    cert = PotentialCertificate(pot, lam)
    verify_potential_certificate(inst, sol, cert)
    return cert


def verify_potential_certificate(inst: MCFInstance, sol: MCFSolution, cert: PotentialCertificate) -> None:
    """Exact dual feasibility, complementary slackness and strong duality."""
    sigma = cert.slack(inst)
    for a in range(inst.num_arcs):
        if cert.lambda_plus[a] < 0 or sigma[a] < 0:
            raise InvariantViolation(f"arc {a} violates dual feasibility")
        if sigma[a] * sol.flow[a] != 0:
            raise InvariantViolation(f"arc {a}: reduced cost and flow both nonzero")
        if cert.lambda_plus[a] * (inst.capacity[a] - sol.flow[a]) != 0:
            raise InvariantViolation(f"arc {a}: capacity multiplier on an unsaturated arc")
    if cert.dual_objective(inst) != flow_objective(inst, sol.flow):
        raise InvariantViolation("primal and dual objectives differ")


def write_dimacs(inst: MCFInstance, comment: str | None = None) -> str:
    """DIMACS min-cost flow text (1-based nodes, supply = outflow - inflow)."""
    lines = []
    if comment:
        lines += [f"c {line}" for line in comment.splitlines()]
    lines.append(f"p min {inst.num_nodes} {inst.num_arcs}")
    for u, b in enumerate(inst.demand):
        if b != 0:
            lines.append(f"n {u + 1} {-b}")
    for a in range(inst.num_arcs):
        lines.append(f"a {inst.tails[a] + 1} {inst.heads[a] + 1} 0 {inst.capacity[a]} {inst.cost[a]}")
    return "\n".join(lines) + "\n"


def read_dimacs(text: str) -> MCFInstance:
    n = None
    demand = None
    tails, heads, caps, costs = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        try:
            if tag == "p":
                if len(parts) != 4 or parts[1] != "min":
                    raise ValueError("expected 'p min NODES ARCS'")
                n = int(parts[2])
                demand = [0] * n
            elif tag == "n":
                demand[int(parts[1]) - 1] = -int(parts[2])
            elif tag == "a":
                t, h, low, cap, cost = (int(x) for x in parts[1:6])
                if low != 0:
                    raise ValueError("nonzero lower bounds are not supported")
                tails.append(t - 1)
                heads.append(h - 1)
                caps.append(cap)
                costs.append(cost)
            else:
                raise ValueError(f"unknown line tag {tag!r}")
        except (ValueError, IndexError, TypeError) as exc:
            raise InvalidInstance(f"DIMACS line {lineno}: {exc}") from None
    if n is None:
        raise InvalidInstance("missing problem line")
    return MCFInstance(n, tuple(tails), tuple(heads), tuple(demand), tuple(caps), tuple(costs))
