"""Svetlichny tests with displaced parity measurements on symmetric Gaussian states.

Every mode uses the same pair of phase-space displacements ``xi_0 = (q0, p0)``
and ``xi_1 = (q1, p1)``; the correlator with ``m`` modes at ``xi_1`` is then a
closed-form Gaussian in the settings.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .gaussian import DomainError, SymmetricGaussianState, build_covariance, coupling_terms, wigner
from .svetlichny import SymmetricCorrelations, coefficients, svetlichny_symmetric

RESIDUAL_TOL = 1e-7
XATOL = 1e-9
THRESHOLD_TOL = 1e-8
ASYMPTOTE = 4.0 * 3.0 ** (-9.0 / 8.0)


@dataclass(frozen=True)
class ParitySettings:
    q0: float = 0.0
    q1: float = 0.0
    p0: float = 0.0
    p1: float = 0.0

    def __post_init__(self):
        for name in ("q0", "q1", "p0", "p1"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"setting {name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def as_array(self):
        return np.array([self.q0, self.q1, self.p0, self.p1])

    def displacement(self, n, m):
        """Stacked phase-space point with the first ``m`` modes at ``xi_1``."""
        blocks = [(self.q1, self.p1)] * m + [(self.q0, self.p0)] * (n - m)
        return np.array(blocks, dtype=float).reshape(-1)


@dataclass(frozen=True)
class ParityOptimum:
    s_opt: float
    settings: ParitySettings
    converged: bool
    residual: float
    seed: str = ""
    a: float = field(default=float("nan"))
    n_modes: int = 0


def _ceil_half(n):
    return -((-n) // 2)


def _exponents(n, a, zp, zm, q0, q1, p0, p1):
    m = np.arange(n + 1)
    k = n - m
    # broadcast settings against the m axis, which goes last
    q0, q1, p0, p1 = (np.asarray(x, dtype=float)[..., None] for x in (q0, q1, p0, p1))
    sum_q = q0 * k + q1 * m
    sum_p = p0 * k + p1 * m
    sq_q = q0 ** 2 * k + q1 ** 2 * m
    sq_p = p0 ** 2 * k + p1 ** 2 * m
    return -zm * sum_q ** 2 - zp * sum_p ** 2 + (zm - a) * sq_q + (zp - a) * sq_p


def correlations(state, settings):
    """All ``n + 1`` displaced-parity correlators ``E^m_n`` as an array over ``m``."""
    zp, zm = state.couplings
    s = settings
    return np.exp(_exponents(state.n_modes, state.a, zp, zm, s.q0, s.q1, s.p0, s.p1))


def correlation_Emn(state, settings, m):
    """Correlator with ``m`` modes displaced by ``xi_1`` and the rest by ``xi_0``."""
    if not 0 <= m <= state.n_modes:
        raise DomainError(f"m must lie in [0, {state.n_modes}], got {m}")
    return float(correlations(state, settings)[m])


def correlation_via_wigner(state, settings, m):
    """``pi^n W(xi)`` at the stacked displacement; independent route to ``E^m_n``."""
    cov = build_covariance(state)
    n = state.n_modes
    return math.pi ** n * wigner(cov, settings.displacement(n, m))


def _svetlichny_values(n, a, zp, zm, q0, q1, p0, p1):
    e = np.exp(_exponents(n, a, zp, zm, q0, q1, p0, p1))
    return e @ coefficients(n) / 2 ** _ceil_half(n)


def svetlichny_parity(state, settings):
    """Svetlichny parameter for shared displaced-parity settings."""
    corr = SymmetricCorrelations(state.n_modes, correlations(state, settings))
    return svetlichny_symmetric(corr)


def landscape(n, a, p0_grid, p1_grid):
    """``S_n`` on the ``(p0, p1)`` grid at ``q0 = q1 = 0``; rows follow ``p0``."""
    state = SymmetricGaussianState(n, a)
    zp, zm = state.couplings
    p0, p1 = np.meshgrid(np.asarray(p0_grid, float), np.asarray(p1_grid, float), indexing="ij")
    return _svetlichny_values(n, state.a, zp, zm, 0.0, 0.0, p0, p1)


def _stationarity_sums(n, a, zp, p0, p1):
    m = np.arange(n + 1)
    k = n - m
    weight = coefficients(n) * np.exp(
        -a * (m * p1 ** 2 + k * p0 ** 2)
        - zp * (2 * m * k * p0 * p1 + m * (m - 1) * p1 ** 2 + k * (k - 1) * p0 ** 2)
    )
    g1 = np.dot(a * m * p1 + zp * (m * k * p0 + m * (m - 1) * p1), weight)
    g0 = np.dot(a * k * p0 + zp * (m * k * p1 + k * (k - 1) * p0), weight)
    return float(g0), float(g1)


def stationarity_residuals(state, p0, p1):
    """Stationarity sums at ``q0 = q1 = 0``.

    Returns ``(g0, g1)`` where ``g0`` is the equation proportional to
    ``dS/dp0`` and ``g1`` the one proportional to ``dS/dp1``; precisely
    ``grad S = -2^(1 - ceil(n/2)) * (g0, g1)``.
    """
    zp, _ = state.couplings
    return _stationarity_sums(state.n_modes, state.a, zp, float(p0), float(p1))


def _gradient_p(n, a, zp, p):
    g0, g1 = _stationarity_sums(n, a, zp, p[0], p[1])
    scale = -(2.0 ** (1 - _ceil_half(n)))
    return np.array([scale * g0, scale * g1])


def _gradient_full(n, a, zp, zm, x):
    q0, q1, p0, p1 = x
    m = np.arange(n + 1)
    k = n - m
    e = np.exp(_exponents(n, a, zp, zm, q0, q1, p0, p1)) * coefficients(n) / 2 ** _ceil_half(n)
    sum_q = q0 * k + q1 * m
    sum_p = p0 * k + p1 * m
    dq0 = -2 * zm * sum_q * k + 2 * (zm - a) * q0 * k
    dq1 = -2 * zm * sum_q * m + 2 * (zm - a) * q1 * m
    dp0 = -2 * zp * sum_p * k + 2 * (zp - a) * p0 * k
    dp1 = -2 * zp * sum_p * m + 2 * (zp - a) * p1 * m
    return np.array([e @ dq0, e @ dq1, e @ dp0, e @ dp1])


def _residual_norm(n, a, zp, zm, x):
    """Stationarity residual in the units of the p-sums, including the q directions."""
    grad = _gradient_full(n, a, zp, zm, x)
    return float(np.max(np.abs(grad)) / 2.0 ** (1 - _ceil_half(n)))


def optimal_p3(a):
    """Antisymmetric optimal displacement ``p0 = -p1`` for three modes."""
    if not a > math.sqrt(1.5):
        raise DomainError(f"no violating setting for a <= sqrt(3/2), got a={a}")
    zp, _ = coupling_terms(3, a)
    return math.sqrt(math.log((a + 2 * zp) / (3 * a - 2 * zp)) / (8 * zp))


def _antisymmetric_rates(n, a, zp):
    # along p0 = -p1 = p, E^m_n = exp(-rate_m * p^2)
    m = np.arange(n + 1)
    return a * n + zp * ((n - 2 * m) ** 2 - n)


def antisymmetric_slope(n, a):
    """``dS/d(p^2)`` at the origin along ``p0 = -p1``; positive means the origin is not a maximum."""
    zp, _ = coupling_terms(n, a)
    rates = _antisymmetric_rates(n, a, zp)
    return float(-np.dot(coefficients(n), rates) / 2 ** _ceil_half(n))


def antisymmetric_optimum(n, a, t_max=None, grid=400):
    """Best ``p >= 0`` on the line ``p0 = -p1 = p`` found by bracketing ``dS/d(p^2) = 0``.

    Returns ``(p, S)``.
    """
    zp, _ = coupling_terms(n, a)
    rates = _antisymmetric_rates(n, a, zp)
    b = coefficients(n) / 2 ** _ceil_half(n)

    def s_of_t(t):
        return np.exp(-np.multiply.outer(t, rates)) @ b

    def ds_of_t(t):
        return float(-(np.exp(-rates * t) * rates) @ b)

    if t_max is None:
        # beyond ~40 / (smallest positive rate) every correlator is negligible
        positive = rates[rates > 0]
        t_max = 40.0 / positive.min() if positive.size else 40.0
    ts = np.concatenate([[0.0], np.geomspace(t_max * 1e-9, t_max, grid)])
    values = s_of_t(ts)
    best = int(np.argmax(values))
    if best == 0 and values[0] >= values.max():
        if ds_of_t(0.0) <= 0.0:
            return 0.0, 1.0
        best = 1
    lo = ts[best - 1] if best > 0 else 0.0
    hi = ts[min(best + 1, ts.size - 1)]
    t_star = ts[best]
    if ds_of_t(lo) > 0 > ds_of_t(hi):
        t_star = optimize.brentq(ds_of_t, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    s_star = float(s_of_t(np.array([t_star]))[0])
    if s_star <= 1.0 and ds_of_t(0.0) <= 0.0:
        return 0.0, 1.0
    return math.sqrt(t_star), s_star


def seed_lattice(a, size=5, span=2.0):
    """Deterministic ``size x size`` seeds on ``[-span, span]^2`` and a copy rescaled by ``1/sqrt(a)``."""
    axis = np.linspace(-span, span, size)
    base = np.array([(x, y) for x in axis for y in axis])
    seeds = [base]
    if a > 1.0 + 1e-12:
        seeds.append(base / math.sqrt(a))
    return np.concatenate(seeds)


def _polish(n, a, zp, p):
    """Newton-type root solve of the stationarity system started at ``p``."""
    def sums(x):
        return np.array(_stationarity_sums(n, a, zp, x[0], x[1]))

    sol = optimize.root(sums, p, method="hybr", options={"xtol": 1e-14})
    # hybr often stops with "not making good progress" once it sits on the root
    if np.max(np.abs(sol.fun)) < np.max(np.abs(sums(p))):
        return sol.x
    return p


def optimize_settings(state, seeds=None, warm_start=None, refine_full=True):
    """Maximize ``S_n`` over the four shared displacement coordinates.

    The search fixes ``q0 = q1 = 0`` and runs simplex searches in the
    ``(p0, p1)`` plane from a deterministic seed lattice; odd ``n`` also
    seeds from the antisymmetric line optimum. A final four-dimensional
    simplex pass checks that moving ``q`` does not help. Non-convergence is
    reported through ``converged`` rather than raised.
    """
    n, a = state.n_modes, state.a
    zp, zm = state.couplings
    b = coefficients(n) / 2 ** _ceil_half(n)

    def neg_s(p):
        return -float(np.exp(_exponents(n, a, zp, zm, 0.0, 0.0, p[0], p[1])) @ b)

    starts = []
    if n % 2:
        p_line, _ = antisymmetric_optimum(n, a)
        starts.append(("antisymmetric", np.array([p_line, -p_line])))
    if warm_start is not None:
        starts.append(("warm", np.asarray(warm_start, dtype=float)[-2:]))
    lattice = seed_lattice(a) if seeds is None else np.asarray(seeds, dtype=float)
    starts.extend((f"lattice[{i}]", s) for i, s in enumerate(lattice))

    best_label, best_p, best_val = "origin", np.zeros(2), -1.0
    for label, start in starts:
        res = optimize.minimize(
            neg_s, start, method="Nelder-Mead",
            options={"xatol": XATOL, "fatol": 1e-15, "maxiter": 4000, "initial_simplex": _simplex(start, a)},
        )
        p = _polish(n, a, zp, res.x)
        if -neg_s(p) < -res.fun - 1e-12:
            p = res.x
        val = -neg_s(p)
        # ties go to the earlier seed so results do not depend on float noise
        if val > best_val + 1e-13:
            best_label, best_p, best_val = label, p, val

    if n % 2 and abs(best_p[0] + best_p[1]) < 1e-6:
        # restore exact antisymmetry lost to simplex round-off
        p_sym = 0.5 * (best_p[0] - best_p[1])
        p_sym = _polish_line(n, a, zp, p_sym)
        sym_val = -neg_s([p_sym, -p_sym])
        if sym_val >= best_val - 1e-13:
            best_p, best_val = np.array([p_sym, -p_sym]), sym_val

    if best_val <= 1.0 + 1e-13:
        # the origin gives exactly 1 and is always stationary
        best_label, best_p, best_val = "origin", np.zeros(2), 1.0

    x_best = np.array([0.0, 0.0, best_p[0], best_p[1]])
    if refine_full:
        def neg_full(x):
            return -float(_svetlichny_values(n, a, zp, zm, *x))

        res = optimize.minimize(
            neg_full, x_best + np.array([1e-3, -1e-3, 0.0, 0.0]), method="Nelder-Mead",
            options={"xatol": XATOL, "fatol": 1e-15, "maxiter": 8000},
        )
        if -res.fun > best_val + 1e-9:
            x_best, best_val, best_label = res.x, -res.fun, best_label + "+4d"

    residual = _residual_norm(n, a, zp, zm, x_best)
    settings = ParitySettings(*x_best)
    return ParityOptimum(
        s_opt=float(best_val), settings=settings, converged=bool(residual < RESIDUAL_TOL),
        residual=residual, seed=best_label, a=a, n_modes=n,
    )


def _polish_line(n, a, zp, p):
    rates = _antisymmetric_rates(n, a, zp)
    b = coefficients(n)
    if p * p < 1e-30:
        # too close to the origin for a secant step; the caller snaps it to zero
        return p
    with warnings.catch_warnings():
        # secant warns when the step tolerance is hit near a flat root; the result is checked below
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = optimize.root_scalar(
            lambda t: float((np.exp(-rates * t) * rates) @ b), x0=p * p, x1=p * p * (1 + 1e-6), method="secant",
            xtol=1e-300, rtol=1e-15,
        )
    if sol.converged and sol.root > 0:
        return math.sqrt(sol.root)
    return p


def _simplex(start, a):
    step = max(0.05 / math.sqrt(a), 1e-4)
    return np.array([start, start + [step, 0.0], start + [0.0, step]])


def optimal_value(n, a):
    """``S_n^opt(a)``."""
    return optimize_settings(SymmetricGaussianState(n, a)).s_opt


def _violates(n, a):
    p, s = antisymmetric_optimum(n, a)
    return s > 1.0 + 1e-14 or antisymmetric_slope(n, a) > 0.0


def threshold(n, lo=1.0, hi=2.0, tol=THRESHOLD_TOL):
    """Smallest mixedness ``a`` at which odd-``n`` states violate the inequality.

    Bisection on whether the optimal value exceeds one; for odd ``n`` the
    optimum lies on the antisymmetric line, where the test is exact through
    the slope of ``S`` at the origin.
    """
    if n % 2 == 0 or n < 3:
        raise DomainError(f"threshold exists only for odd n >= 3, got n={n}")
    if _violates(n, lo) or not _violates(n, hi):
        raise DomainError(f"no sign change of S_opt - 1 on ({lo}, {hi}] for n={n}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _violates(n, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def scan_vs_a(n, a_grid, warm=True):
    """One :class:`ParityOptimum` per grid point, warm-starting from the previous row."""
    rows = []
    previous = None
    for a in np.asarray(a_grid, dtype=float):
        if a < 1.0:
            raise DomainError(f"grid values must be >= 1, got {a}")
        opt = optimize_settings(SymmetricGaussianState(n, a), warm_start=previous if warm else None)
        rows.append(opt)
        previous = opt.settings.as_array()
    return rows
