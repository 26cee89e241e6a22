"""Input coercion helpers shared by the estimators and the CLI."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import Hypergraph, as_demand
from .errors import DemandNotZeroSum, InvalidInstance


def check_hypergraph(H) -> Hypergraph:
    """Accept a :class:`Hypergraph`, an instance dict or ``(n, edges[, weights])``."""
    if isinstance(H, Hypergraph):
        return H
    if isinstance(H, dict):
        from .serialization import instance_from_dict

        return instance_from_dict(H).hypergraph
    if isinstance(H, (tuple, list)) and len(H) in (2, 3):
        return Hypergraph(*H)
    raise InvalidInstance(f"cannot interpret {type(H).__name__} as a hypergraph")


def check_demand(s, n: int, zero_sum: bool = True) -> tuple:
    """Exact dyadic demand of length ``n``; floats must be exactly dyadic (all finite floats are)."""
    if isinstance(s, np.ndarray):
        if s.ndim != 1:
            raise InvalidInstance(f"demand must be one-dimensional, got shape {s.shape}")
        if s.dtype.kind == "f" and not np.all(np.isfinite(s)):
            raise InvalidInstance("demand contains non-finite values")
        s = s.tolist()
    out = as_demand(s, n)
    if zero_sum and sum(out) != 0:
        raise DemandNotZeroSum(f"demand sums to {sum(out)}")
    return out


def check_demand_matrix(S, n: int, zero_sum: bool = True) -> list:
    """Rows of a 1-D or 2-D demand array as exact tuples."""
    if isinstance(S, np.ndarray):
        arr = S
    else:
        rows = list(S)
        if rows and not isinstance(rows[0], (list, tuple, np.ndarray)):
            rows = [rows]
        return [check_demand(list(r), n, zero_sum) for r in rows]
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n:
        raise InvalidInstance(f"expected demands of shape (k, {n}), got {arr.shape}")
    return [check_demand(row, n, zero_sum) for row in arr]


def to_float_array(rows) -> np.ndarray:
    return np.asarray([[float(Fraction(v)) for v in r] for r in rows], dtype=float)
