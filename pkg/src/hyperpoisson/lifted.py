"""The lifted directed graph: one transport/quadratic gadget per hyperedge."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .core import Hypergraph, as_demand, overlap_tree
from .dual import DualVector
from .errors import InvalidInstance, NotConnected

TRANSPORT = 0
QUADRATIC = 1


@dataclass(frozen=True, eq=False)
class LiftedGraph:
    """Arc list of the lift.

    Nodes are ``0..n-1`` for vertices, then ``e- = n + 2e`` and ``e+ = n + 2e + 1``.
    Incidence ``k`` (edge ``e``, vertex ``v``, in edge order) owns arc ``2k`` =
    ``(e+, v)`` and arc ``2k + 1`` = ``(v, e-)``; arc ``2P + e`` is ``(e-, e+)``.
    """

    hypergraph: Hypergraph
    tails: np.ndarray
    heads: np.ndarray
    arc_edge: np.ndarray
    arc_kind: np.ndarray
    arc_vertex: np.ndarray

    @property
    def n(self) -> int:
        return self.hypergraph.n

    @property
    def num_nodes(self) -> int:
        return self.hypergraph.n + 2 * self.hypergraph.num_edges

    @property
    def num_arcs(self) -> int:
        return len(self.tails)

    @property
    def num_incidences(self) -> int:
        return self.hypergraph.incidence_size

    def minus(self, e: int) -> int:
        return self.n + 2 * e

    def plus(self, e: int) -> int:
        return self.n + 2 * e + 1

    def quad_arc(self, e: int) -> int:
        return 2 * self.num_incidences + e

    @cached_property
    def quad_arcs(self) -> np.ndarray:
        return np.arange(2 * self.num_incidences, self.num_arcs)

    @cached_property
    def incidence_offsets(self) -> np.ndarray:
        sizes = [len(e) for e in self.hypergraph.edges]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    @cached_property
    def incidence_matrix(self) -> sp.csr_matrix:
        """Sparse ``A`` with ``(A f)_u`` = inflow minus outflow at ``u``."""
        m = self.num_arcs
        rows = np.concatenate([self.heads, self.tails])
        cols = np.concatenate([np.arange(m), np.arange(m)])
        vals = np.concatenate([np.ones(m), -np.ones(m)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.num_nodes, m))


def build_lifted_graph(h: Hypergraph) -> LiftedGraph:
    n = h.n
    P = h.incidence_size
    E = h.num_edges
    tails = np.empty(2 * P + E, dtype=np.int64)
    heads = np.empty_like(tails)
    arc_edge = np.empty_like(tails)
    arc_kind = np.zeros_like(tails)
    arc_vertex = np.full_like(tails, -1)
    k = 0
    for i, e in enumerate(h.edges):
        em, ep = n + 2 * i, n + 2 * i + 1
        for v in e:
            tails[2 * k], heads[2 * k] = ep, v
            tails[2 * k + 1], heads[2 * k + 1] = v, em
            arc_edge[2 * k] = arc_edge[2 * k + 1] = i
            arc_vertex[2 * k] = arc_vertex[2 * k + 1] = v
            k += 1
        a = 2 * P + i
        tails[a], heads[a] = em, ep
        arc_edge[a] = i
        arc_kind[a] = QUADRATIC
    for arr in (tails, heads, arc_edge, arc_kind, arc_vertex):
        arr.setflags(write=False)
    return LiftedGraph(h, tails, heads, arc_edge, arc_kind, arc_vertex)


def lifted_demand(h: Hypergraph, s: Sequence) -> tuple:
    demand = as_demand(s, h.n)
    if sum(demand) != 0:
        raise InvalidInstance("lifted demand requires a zero-sum vertex demand")
    return demand + (Fraction(0),) * (2 * h.num_edges)


def node_imbalance(g: LiftedGraph, f: Sequence):
    """Inflow minus outflow per node.

    Exact (a list of Fractions) when ``f`` holds ints or Fractions, otherwise a
    float array.
    """
    if len(f) != g.num_arcs:
        raise InvalidInstance(f"flow has {len(f)} entries, expected {g.num_arcs}")
    if isinstance(f, np.ndarray) and f.dtype.kind == "f":
        return g.incidence_matrix @ f
    out = [Fraction(0)] * g.num_nodes
    for a, fa in enumerate(f):
        out[g.heads[a]] += fa
        out[g.tails[a]] -= fa
    return out


def positive_circulation(g: LiftedGraph) -> tuple:
    c = [1] * g.num_arcs
    for i, e in enumerate(g.hypergraph.edges):
        c[g.quad_arc(i)] = len(e)
    return tuple(c)


def _power_of_two_at_least(x: Fraction) -> int:
    cap = 1
    while cap < x:
        cap *= 2
    return cap


def feasible_start(h: Hypergraph, s: Sequence, g: LiftedGraph | None = None):
    """Strictly interior flow with ``A f = b`` exactly, plus a dyadic cap.

    Demand is routed through the vertex-overlap BFS tree rooted at vertex 0
    (each tree step ``u -> v`` on edge ``e`` uses ``u -> e- -> e+ -> v``), and
    the positive circulation is added on top.
    """
    g = g or build_lifted_graph(h)
    demand = as_demand(s, h.n)
    if sum(demand) != 0:
        raise InvalidInstance("feasible start requires a zero-sum demand")
    tree = overlap_tree(h)
    if not tree.connected:
        raise NotConnected(f"hypergraph has {tree.components} components")
    out_sum = [max(Fraction(0), -d) for d in demand]
    in_sum = [max(Fraction(0), d) for d in demand]
    for v in reversed(tree.order):
        p = tree.parent[v]
        if p >= 0:
            out_sum[p] += out_sum[v]
            in_sum[p] += in_sum[v]
    pos = {}
    off = g.incidence_offsets
    for i, e in enumerate(h.edges):
        for j, v in enumerate(e):
            pos[i, v] = off[i] + j
    flow = [Fraction(c) for c in positive_circulation(g)]
    for v in range(h.n):
        p = tree.parent[v]
        if p < 0:
            continue
        e = tree.parent_edge[v]
        up = out_sum[v]
        down = in_sum[v]
        # v -> p carries ``up``; p -> v carries ``down``
        flow[2 * pos[e, v] + 1] += up
        flow[2 * pos[e, p]] += up
        flow[2 * pos[e, p] + 1] += down
        flow[2 * pos[e, v]] += down
        flow[g.quad_arc(e)] += up + down
    norm1 = sum(abs(d) for d in demand)
    cap = _power_of_two_at_least(norm1 + max(positive_circulation(g), default=0) + 2)
    return tuple(flow), cap


def masses(g: LiftedGraph, f) -> np.ndarray:
    return np.asarray(f, dtype=float)[g.quad_arcs]


def induced_dual(g: LiftedGraph, f) -> DualVector:
    """``(eta_e)_v = f(e+, v) - f(v, e-)`` read from transport arcs."""
    f = np.asarray(f, dtype=float)
    P = g.num_incidences
    diff = f[0 : 2 * P : 2] - f[1 : 2 * P : 2]
    off = g.incidence_offsets
    return DualVector(
        tuple(tuple(float(x) for x in diff[off[i] : off[i + 1]]) for i in range(g.hypergraph.num_edges)),
        exact=False,
    )


def node_label(g: LiftedGraph, u: int) -> str:
    if u < g.n:
        return f"v{u}"
    e, side = divmod(u - g.n, 2)
    return f"e{e}{'+' if side else '-'}"


def to_dot(g: LiftedGraph, flow: Sequence | None = None) -> str:
    """Graphviz digraph of the lift; arcs are tagged with their class."""
    lines = ["digraph lifted {"]
    for u in range(g.num_nodes):
        shape = "circle" if u < g.n else "box"
        lines.append(f'  "{node_label(g, u)}" [shape={shape}];')
    for a in range(g.num_arcs):
        kind = "quadratic" if g.arc_kind[a] == QUADRATIC else "transport"
        attrs = [f'class="{kind}"', f'edge_id={int(g.arc_edge[a])}', f'arc_id={a}']
        if kind == "quadratic":
            attrs.append("style=bold")
        if flow is not None:
            attrs.append(f'label="{float(flow[a]):.6g}"')
        lines.append(
            f'  "{node_label(g, int(g.tails[a]))}" -> "{node_label(g, int(g.heads[a]))}" [{", ".join(attrs)}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
