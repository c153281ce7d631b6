"""scikit-learn style wrappers around the optimizers and the power-law fit.

Inputs are one-dimensional parameter grids (``a`` for the parity optimizer,
``r`` for the pseudospin optimizer, ``n`` for the power law), accepted either
as 1-D arrays or as single-column 2-D arrays.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import parity, pseudospin
from .gaussian import SymmetricGaussianState, a_from_squeezing


def check_grid(X, name="X", minimum=None, strictly_positive=False):
    """Validate a parameter grid and return it as a finite 1-D float array."""
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] != 1:
        raise ValueError(f"{name} must have a single column, got shape {arr.shape}")
    arr = check_array(arr.reshape(-1, 1), dtype=float, ensure_all_finite=True, input_name=name).ravel()
    if minimum is not None and np.any(arr < minimum):
        raise ValueError(f"{name} values must be >= {minimum}")
    if strictly_positive and np.any(arr <= 0):
        raise ValueError(f"{name} values must be positive")
    return arr


class ParitySvetlichnyOptimizer(TransformerMixin, BaseEstimator):
    """Optimal displaced-parity settings for the ``n_modes`` symmetric Gaussian family.

    ``fit`` runs one optimization per ``a`` value. ``transform`` returns the
    optimal ``(q0, q1, p0, p1)`` rows and ``predict`` the optimal Svetlichny
    values.
    """

    def __init__(self, n_modes=3, warm_start=True, refine_full=True):
        self.n_modes = n_modes
        self.warm_start = warm_start
        self.refine_full = refine_full

    def _solve(self, a_values):
        rows, previous = [], None
        for a in a_values:
            opt = parity.optimize_settings(
                SymmetricGaussianState(self.n_modes, a),
                warm_start=previous if self.warm_start else None,
                refine_full=self.refine_full,
            )
            rows.append(opt)
            previous = opt.settings.as_array()
        return rows

    def fit(self, X, y=None):
        a = check_grid(X, "a", minimum=1.0)
        self.results_ = self._solve(a)
        self.a_ = a
        self.s_opt_ = np.array([row.s_opt for row in self.results_])
        self.settings_ = np.array([row.settings.as_array() for row in self.results_])
        self.converged_ = np.array([row.converged for row in self.results_])
        return self

    def _rows_for(self, X):
        check_is_fitted(self, "results_")
        a = check_grid(X, "a", minimum=1.0)
        lookup = {float(v): row for v, row in zip(self.a_, self.results_)}
        missing = [v for v in a if float(v) not in lookup]
        if missing:
            lookup.update({float(v): row for v, row in zip(missing, self._solve(missing))})
        return [lookup[float(v)] for v in a]

    def predict(self, X):
        return np.array([row.s_opt for row in self._rows_for(X)])

    def transform(self, X):
        return np.array([row.settings.as_array() for row in self._rows_for(X)])


class PseudospinSvetlichnyOptimizer(BaseEstimator):
    """Optimal pseudospin Svetlichny value for the three-mode squeezed state at each ``r``."""

    def __init__(self, n_starts=20, random_state=0, tail_tol=pseudospin.TAIL_TOL):
        self.n_starts = n_starts
        self.random_state = random_state
        self.tail_tol = tail_tol

    def fit(self, X, y=None):
        r = check_grid(X, "r", minimum=0.0)
        results, fixed, cutoffs = [], [], []
        for value in r:
            state = pseudospin.ghz_state_fock(value, tail_tol=self.tail_tol)
            results.append(
                pseudospin.optimize_pseudospin_settings(state, n_starts=self.n_starts, seed=self.random_state)
            )
            fixed.append(pseudospin.svetlichny_fixed_settings(state))
            cutoffs.append(state.cutoff)
        self.r_ = r
        self.results_ = results
        self.s_opt_ = np.array([res.s_opt for res in results])
        self.s_fixed_ = np.array(fixed)
        self.cutoffs_ = np.array(cutoffs)
        self.a_ = np.array([a_from_squeezing(v) for v in r])
        return self

    def predict(self, X):
        check_is_fitted(self, "results_")
        r = check_grid(X, "r", minimum=0.0)
        lookup = dict(zip(self.r_.tolist(), self.s_opt_.tolist()))
        out = []
        for value in r:
            if value not in lookup:
                state = pseudospin.ghz_state_fock(value, tail_tol=self.tail_tol)
                lookup[value] = pseudospin.optimize_pseudospin_settings(
                    state, n_starts=self.n_starts, seed=self.random_state
                ).s_opt
            out.append(lookup[value])
        return np.array(out)


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """``f = prefactor * n ** exponent`` fitted by least squares on ``log f`` vs ``log n``.

    Parameters
    ----------
    window : tuple of float, optional
        Inclusive ``(lo, hi)`` range of ``n`` used in the fit. Defaults to the
        upper half of the training range.
    """

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        n = check_grid(X, "n", strictly_positive=True)
        f = np.asarray(y, dtype=float).ravel()
        if f.shape != n.shape:
            raise ValueError(f"X and y have inconsistent lengths {n.size} and {f.size}")
        self.prefactor_, self.exponent_ = pseudospin.fit_power_law(n, f, self.window)
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        n = check_grid(X, "n", strictly_positive=True)
        return self.prefactor_ * n ** self.exponent_
