"""Hypergraph instances, dyadic scalars and the primal Poisson objective."""
from __future__ import annotations

import numbers
import re
import warnings
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import (
    DemandNotZeroSum,
    EmptyEdge,
    InvalidInstance,
    NonDyadic,
    NonpositiveWeight,
    NotConnected,
    ZeroTotalDegree,
)

_POW2_RE = re.compile(r"^\s*([+-]?\d+)\s*\*\s*2\s*\^\s*\(?\s*-\s*(\d+)\s*\)?\s*$")
_OVER_POW2_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*2\s*\^\s*(\d+)\s*$")
_RATIO_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")


class Dyadic:
    """Exact scalar ``numerator * 2**-exponent`` with ``exponent >= 0``.

    Instances are canonical: the numerator is odd unless the value is zero,
    in which case the exponent is 0.  Sums, differences and products of
    dyadics are dyadic and computed exactly.
    """

    __slots__ = ("_num", "_exp")

    def __init__(self, numerator: int = 0, exponent: int = 0):
        numerator = int(numerator)
        exponent = int(exponent)
        if exponent < 0:
            numerator <<= -exponent
            exponent = 0
        if numerator == 0:
            exponent = 0
        else:
            tz = (numerator & -numerator).bit_length() - 1
            shift = min(tz, exponent)
            numerator >>= shift
            exponent -= shift
        self._num = numerator
        self._exp = exponent

    @property
    def numerator(self) -> int:
        return self._num

    @property
    def exponent(self) -> int:
        return self._exp

    @property
    def denominator(self) -> int:
        return 1 << self._exp

    @classmethod
    def from_value(cls, value) -> "Dyadic":
        """Convert ints, floats, Fractions, dyadics or strings; reject non-dyadic values."""
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, str):
            return parse_dyadic(value)
        if isinstance(value, bool):
            raise NonDyadic(f"boolean is not a scalar: {value!r}")
        if isinstance(value, numbers.Rational) or isinstance(value, float):
            frac = Fraction(value)
        else:
            raise NonDyadic(f"cannot interpret {value!r} as a dyadic scalar")
        den = frac.denominator
        if den & (den - 1):
            raise NonDyadic(f"{frac} is not dyadic (denominator {den})")
        return cls(frac.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self._num, 1 << self._exp)

    def _coerce(self, other):
        if isinstance(other, Dyadic):
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return Dyadic(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.to_fraction() + other
        q = max(self._exp, o._exp)
        return Dyadic((self._num << (q - self._exp)) + (o._num << (q - o._exp)), q)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.to_fraction() - other
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.to_fraction() * other
        return Dyadic(self._num * o._num, self._exp + o._exp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.to_fraction() / other

    def __rtruediv__(self, other):
        return other / self.to_fraction()

    def __neg__(self):
        return Dyadic(-self._num, self._exp)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dyadic(abs(self._num), self._exp)

    def __float__(self):
        return float(self.to_fraction())

    def __bool__(self):
        return self._num != 0

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self._num == other._num and self._exp == other._exp
        if isinstance(other, (numbers.Rational, float)):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self.to_fraction() < Fraction(other) if not isinstance(other, float) else float(self) < other

    def __le__(self, other):
        return self.to_fraction() <= Fraction(other) if not isinstance(other, float) else float(self) <= other

    def __gt__(self, other):
        return self.to_fraction() > Fraction(other) if not isinstance(other, float) else float(self) > other

    def __ge__(self, other):
        return self.to_fraction() >= Fraction(other) if not isinstance(other, float) else float(self) >= other

    def __repr__(self):
        return f"Dyadic({self._num}, {self._exp})"

    def __str__(self):
        return format_dyadic(self)


numbers.Rational.register(Dyadic)


def parse_dyadic(text: str) -> Dyadic:
    """Parse ``"a*2^-q"``, ``"a/2^q"``, ``"a/b"`` or a decimal string, exactly.

    Values that are not dyadic (``"0.1"``, ``"1/3"``) raise :class:`NonDyadic`;
    nothing is rounded.
    """
    m = _POW2_RE.match(text)
    if m:
        return Dyadic(int(m.group(1)), int(m.group(2)))
    m = _OVER_POW2_RE.match(text)
    if m:
        return Dyadic(int(m.group(1)), int(m.group(2)))
    m = _RATIO_RE.match(text)
    if m:
        return Dyadic.from_value(Fraction(int(m.group(1)), int(m.group(2))))
    try:
        dec = Decimal(text.strip())
    except InvalidOperation:
        raise NonDyadic(f"unparseable scalar {text!r}") from None
    if not dec.is_finite():
        raise NonDyadic(f"non-finite scalar {text!r}")
    return Dyadic.from_value(Fraction(dec))


def format_dyadic(value) -> str:
    d = Dyadic.from_value(value)
    if d.exponent == 0:
        return str(d.numerator)
    return f"{d.numerator}*2^-{d.exponent}"


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Dyadic):
        return value.to_fraction()
    if isinstance(value, str):
        return parse_dyadic(value).to_fraction()
    return Fraction(value)


def is_dyadic(value) -> bool:
    den = Fraction(value).denominator
    return den & (den - 1) == 0


@dataclass(frozen=True)
class Hypergraph:
    """Weighted hypergraph on vertices ``0..n-1``.

    ``edges[i]`` lists the vertices of hyperedge ``i`` (at least two, distinct);
    ``weights[i]`` is its positive dyadic weight.
    """

    n: int
    edges: tuple
    weights: tuple = None

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        weights = self.weights
        if weights is None:
            weights = (1,) * len(edges)
        if len(weights) != len(edges):
            raise InvalidInstance(f"{len(edges)} edges but {len(weights)} weights")
        weights = tuple(Dyadic.from_value(w) for w in weights)
        n = int(self.n)
        if n < 1:
            raise InvalidInstance("hypergraph needs at least one vertex")
        for i, e in enumerate(edges):
            if len(e) < 2:
                raise EmptyEdge(f"edge {i} has fewer than two vertices")
            if len(set(e)) != len(e):
                raise InvalidInstance(f"edge {i} repeats a vertex: {e}")
            for v in e:
                if not 0 <= v < n:
                    raise InvalidInstance(f"edge {i} has vertex {v} outside [0, {n})")
        for i, w in enumerate(weights):
            if w.numerator <= 0:
                raise NonpositiveWeight(f"edge {i} has weight {w}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def incidence_size(self) -> int:
        return sum(len(e) for e in self.edges)

    @cached_property
    def weight_fractions(self) -> tuple:
        return tuple(w.to_fraction() for w in self.weights)

    @cached_property
    def weight_array(self):
        import numpy as np

        return np.array([float(w) for w in self.weights])

    @cached_property
    def degrees(self) -> tuple:
        """Weighted degrees ``d_v`` as exact fractions."""
        d = [Fraction(0)] * self.n
        for e, w in zip(self.edges, self.weight_fractions):
            for v in e:
                d[v] += w
        return tuple(d)

    @cached_property
    def incident_edges(self) -> tuple:
        inc = [[] for _ in range(self.n)]
        for i, e in enumerate(self.edges):
            for v in e:
                inc[v].append(i)
        return tuple(tuple(x) for x in inc)

    def __hash__(self):
        return hash((self.n, self.edges, self.weights))


@dataclass(frozen=True)
class OverlapTree:
    """BFS spanning forest of the vertex-overlap graph.

    ``parent[v]`` is ``-1`` at roots; ``parent_edge[v]`` is the lowest-id
    hyperedge containing ``v`` and its parent.  ``order`` is BFS order.
    """

    parent: tuple
    parent_edge: tuple
    order: tuple
    components: int

    @property
    def connected(self) -> bool:
        return self.components == 1


def overlap_tree(h: Hypergraph, root: int = 0) -> OverlapTree:
    first_shared = [dict() for _ in range(h.n)]
    for i, e in enumerate(h.edges):
        for u in e:
            fs = first_shared[u]
            for v in e:
                if v != u and v not in fs:
                    fs[v] = i
    neighbours = [sorted(fs) for fs in first_shared]
    parent = [-1] * h.n
    parent_edge = [-1] * h.n
    seen = [False] * h.n
    order = []
    components = 0
    for start in [root] + [v for v in range(h.n) if v != root]:
        if seen[start]:
            continue
        components += 1
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in neighbours[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    parent_edge[v] = first_shared[u][v]
                    queue.append(v)
    return OverlapTree(tuple(parent), tuple(parent_edge), tuple(order), components)


@dataclass(frozen=True)
class ValidatedInstance:
    hypergraph: Hypergraph
    demand: tuple
    tree: OverlapTree
    bound_exponent: float
    bounds_ok: bool
    bound_violations: tuple = field(default=())


def as_demand(s: Sequence, n: int | None = None) -> tuple:
    """Exact dyadic demand vector as a tuple of Fractions."""
    vals = tuple(Dyadic.from_value(v).to_fraction() for v in s)
    if n is not None and len(vals) != n:
        raise InvalidInstance(f"demand has {len(vals)} entries, expected {n}")
    return vals


def validate_instance(h: Hypergraph, s: Sequence, require_connected: bool = True,
                      k0: float = 4.0, enforce_bounds: bool = False) -> ValidatedInstance:
    """Check a Poisson instance and return a connectivity witness.

    Polynomial-boundedness (``|s|_inf <= P^k0``, ``P^-k0 <= w_e <= P^k0``) is
    only warned about unless ``enforce_bounds`` is set.
    """
    demand = as_demand(s, h.n)
    if require_connected and sum(demand) != 0:
        raise DemandNotZeroSum(f"demand sums to {sum(demand)}")
    tree = overlap_tree(h)
    if require_connected and not tree.connected:
        raise NotConnected(f"hypergraph has {tree.components} components")
    P = h.incidence_size
    bound = float(P) ** k0
    problems = []
    smax = max((abs(v) for v in demand), default=Fraction(0))
    if float(smax) > bound:
        problems.append(f"|s|_inf = {float(smax):g} exceeds P^{k0:g}")
    for i, w in enumerate(h.weights):
        wf = float(w)
        if wf > bound or wf < 1.0 / bound:
            problems.append(f"weight of edge {i} = {wf:g} outside [P^-{k0:g}, P^{k0:g}]")
    if problems:
        msg = "; ".join(problems)
        if enforce_bounds:
            raise InvalidInstance(msg)
        warnings.warn(msg, stacklevel=2)
    return ValidatedInstance(h, demand, tree, k0, not problems, tuple(problems))


def edge_range(x: Sequence, e: Sequence[int]):
    vals = [x[v] for v in e]
    return max(vals) - min(vals)


def energy(h: Hypergraph, x: Sequence):
    """Half the weighted sum of squared edge ranges.

    Exact when ``x`` holds Fractions; float otherwise.
    """
    exact = isinstance(x[0], (Fraction, int)) if len(x) else True
    ws = h.weight_fractions if exact else [float(w) for w in h.weights]
    total = 0
    for e, w in zip(h.edges, ws):
        r = edge_range(x, e)
        total += w * r * r
    return total / 2


def primal_objective(h: Hypergraph, s: Sequence, x: Sequence):
    """Return ``(energy, energy - <s, x>)``."""
    if len(x) != h.n:
        raise InvalidInstance(f"potential has {len(x)} entries, expected {h.n}")
    en = energy(h, x)
    return en, en - sum(si * xi for si, xi in zip(s, x))


def weighted_mean(h: Hypergraph, x: Sequence) -> Fraction:
    d = h.degrees
    total = sum(d)
    if total == 0:
        raise ZeroTotalDegree("total weighted degree is zero")
    return sum(dv * Fraction(xv) for dv, xv in zip(d, x)) / total


def project_to_weighted_mean_zero(h: Hypergraph, x: Sequence) -> tuple:
    """Subtract the degree-weighted average; exact in rational arithmetic."""
    if any(dv <= 0 for dv in h.degrees):
        raise ZeroTotalDegree("every vertex needs positive weighted degree")
    c = weighted_mean(h, x)
    return tuple(Fraction(v) - c for v in x)


def is_normalized(h: Hypergraph, x: Sequence) -> bool:
    return sum(dv * Fraction(xv) for dv, xv in zip(h.degrees, x)) == 0
