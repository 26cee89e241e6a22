"""scikit-learn style wrappers around the certified solvers."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .certificate import DEFAULT_GAMMA
from .core import validate_instance
from .recovery import DEFAULT_GRID_BITS
from .regularized import ground_augment, resolvent, solve_regularized
from .solver import DEFAULT_EPSILON, solve_poisson
from .validation import check_demand_matrix, check_hypergraph, to_float_array


class _HypergraphEstimator(BaseEstimator):
    def _check_fitted(self):
        if not hasattr(self, "hypergraph_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def _solver_kwargs(self):
        return {"epsilon": self.epsilon, "grid_bits": self.grid_bits, "gamma": Fraction(self.gamma)}


class PoissonSolver(_HypergraphEstimator):
    """Certified solver for ``min E(x) - <s, x>`` on a fixed hypergraph.

    ``fit(H, s)`` stores the hypergraph and, when ``s`` is given, solves for
    it (``x_``, ``gap_``, ``result_``).  ``predict(S)`` solves one demand per
    row and returns the potentials as floats; exact results are kept in
    ``results_``.
    """

    def __init__(self, epsilon=DEFAULT_EPSILON, grid_bits=DEFAULT_GRID_BITS, gamma=DEFAULT_GAMMA,
                 enforce_bounds=False):
        self.epsilon = epsilon
        self.grid_bits = grid_bits
        self.gamma = gamma
        self.enforce_bounds = enforce_bounds

    def fit(self, X, y=None):
        h = check_hypergraph(X)
        validate_instance(h, [0] * h.n, require_connected=True, enforce_bounds=self.enforce_bounds)
        self.hypergraph_ = h
        self.n_vertices_ = h.n
        if y is not None:
            (s,) = check_demand_matrix([list(y)] if not isinstance(y, np.ndarray) else np.asarray(y), h.n)
            self.result_ = solve_poisson(h, s, enforce_bounds=self.enforce_bounds, **self._solver_kwargs())
            self.x_ = np.asarray([float(v) for v in self.result_.x])
            self.gap_ = float(self.result_.gap)
        return self

    def predict(self, S):
        self._check_fitted()
        rows = check_demand_matrix(S, self.n_vertices_)
        self.results_ = [solve_poisson(self.hypergraph_, s, enforce_bounds=self.enforce_bounds,
                                       **self._solver_kwargs()) for s in rows]
        self.gaps_ = np.asarray([float(r.gap) for r in self.results_])
        return to_float_array([r.x for r in self.results_])

    def score(self, S, y=None):
        """Minus the mean certified gap over the demands in ``S`` (higher is better)."""
        self.predict(S)
        return -float(np.mean(self.gaps_))


class RegularizedPoissonSolver(_HypergraphEstimator):
    """Certified solver for ``min E(x) + (lam/2) x'Dx - <s, x>``; ``s`` need not sum to zero."""

    def __init__(self, lam=1, epsilon=DEFAULT_EPSILON, grid_bits=DEFAULT_GRID_BITS, gamma=DEFAULT_GAMMA):
        self.lam = lam
        self.epsilon = epsilon
        self.grid_bits = grid_bits
        self.gamma = gamma

    def fit(self, X, y=None):
        h = check_hypergraph(X)
        ground_augment(h, self.lam, [0] * h.n)
        self.hypergraph_ = h
        self.n_vertices_ = h.n
        if y is not None:
            (s,) = check_demand_matrix([list(y)] if not isinstance(y, np.ndarray) else np.asarray(y), h.n,
                                       zero_sum=False)
            self.result_ = solve_regularized(h, self.lam, s, **self._solver_kwargs())
            self.x_ = np.asarray([float(v) for v in self.result_.x])
            self.gap_ = float(self.result_.gap)
        return self

    def predict(self, S):
        self._check_fitted()
        rows = check_demand_matrix(S, self.n_vertices_, zero_sum=False)
        self.results_ = [solve_regularized(self.hypergraph_, self.lam, s, **self._solver_kwargs()) for s in rows]
        self.gaps_ = np.asarray([float(r.gap) for r in self.results_])
        return to_float_array([r.x for r in self.results_])


class HypergraphResolvent(TransformerMixin, _HypergraphEstimator):
    """Resolvent map ``y -> argmin_x E(x) + (lam/2) |x - y|_D^2`` applied row-wise.

    The squared ``D``-distance of each output to the exact resolvent is at
    most ``2 * gap / lam``; per-row gaps are in ``gaps_``.
    """

    def __init__(self, lam=1, epsilon=DEFAULT_EPSILON, grid_bits=DEFAULT_GRID_BITS, gamma=DEFAULT_GAMMA):
        self.lam = lam
        self.epsilon = epsilon
        self.grid_bits = grid_bits
        self.gamma = gamma

    def fit(self, X, y=None):
        h = check_hypergraph(X)
        ground_augment(h, self.lam, [0] * h.n)
        self.hypergraph_ = h
        self.n_vertices_ = h.n
        return self

    def transform(self, Y):
        self._check_fitted()
        rows = check_demand_matrix(Y, self.n_vertices_, zero_sum=False)
        self.results_ = [resolvent(self.hypergraph_, self.lam, y, **self._solver_kwargs()) for y in rows]
        self.gaps_ = np.asarray([float(r.gap) for r in self.results_])
        return to_float_array([r.x for r in self.results_])

    def fit_transform(self, X, y=None, **fit_params):
        raise TypeError("fit takes a hypergraph and transform takes potentials; call them separately")
