"""Pure permutationally invariant n-mode Gaussian states.

Quadratures are ordered ``(q1, p1, q2, p2, ..., qn, pn)`` and covariance
matrices are vacuum-normalized, so the vacuum has ``sigma = identity``.
First moments are always zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

PHYSICALITY_SLACK = 1e-9
CONDITION_LIMIT = 1e12


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class SingularCovarianceError(np.linalg.LinAlgError):
    """Covariance matrix is too ill-conditioned to invert reliably."""


def coupling_terms(n, a):
    """Off-diagonal couplings ``(z_plus, z_minus)`` of the symmetric normal form.

    Parameters
    ----------
    n : int
        Number of modes, at least 2.
    a : float
        Local mixedness factor, at least 1.

    Returns
    -------
    tuple of float
        ``z_plus >= z_minus``; both vanish at ``a = 1``.
    """
    n = int(n)
    if n < 2:
        raise DomainError(f"need at least two modes, got n={n}")
    if not a >= 1.0:
        raise DomainError(f"mixedness factor must satisfy a >= 1, got a={a}")
    excess = a * a - 1.0
    root = math.sqrt(excess * (a * a * n * n - (n - 2) ** 2))
    denom = 2.0 * a * (n - 1)
    base = excess * (n - 2)
    return (base + root) / denom, (base - root) / denom


@dataclass(frozen=True)
class SymmetricGaussianState:
    """Pure, permutationally invariant Gaussian state labelled by ``(n_modes, a)``."""

    n_modes: int
    a: float

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 2:
            raise DomainError(f"n_modes must be an integer >= 2, got {self.n_modes}")
        if not (np.isfinite(self.a) and self.a >= 1.0):
            raise DomainError(f"a must be finite and >= 1, got {self.a}")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        object.__setattr__(self, "a", float(self.a))

    @property
    def couplings(self):
        return coupling_terms(self.n_modes, self.a)

    def covariance(self):
        return build_covariance(self)


def symplectic_form(n_modes):
    """Direct sum of ``n_modes`` copies of ``[[0, 1], [-1, 0]]``."""
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), omega)


def build_covariance(state):
    """Covariance matrix with ``diag(a, a)`` diagonal blocks and ``diag(z+, z-)`` elsewhere."""
    n = state.n_modes
    z_plus, z_minus = state.couplings
    alpha = np.diag([state.a, state.a])
    gamma = np.diag([z_plus, z_minus])
    off = np.ones((n, n)) - np.eye(n)
    return np.kron(np.eye(n), alpha) + np.kron(off, gamma)


def _check_square_symmetric(cov):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError(f"covariance must be a 2n x 2n matrix, got shape {cov.shape}")
    scale = max(np.max(np.abs(cov)), 1.0)
    if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
        raise ValueError("covariance matrix is not symmetric")
    return cov


def check_physical(cov):
    """True iff ``sigma + i Omega`` is positive semidefinite up to ``PHYSICALITY_SLACK``."""
    cov = _check_square_symmetric(cov)
    omega = symplectic_form(cov.shape[0] // 2)
    eigs = np.linalg.eigvalsh(cov + 1j * omega)
    return bool(eigs.min() >= -PHYSICALITY_SLACK)


def symplectic_eigenvalues(cov):
    """Symplectic spectrum, from the moduli of the eigenvalues of ``i Omega sigma``."""
    cov = _check_square_symmetric(cov)
    omega = symplectic_form(cov.shape[0] // 2)
    eigs = np.abs(np.linalg.eigvals(1j * omega @ cov))
    return np.sort(eigs)[::2]


def purity(cov):
    """Purity ``(det sigma)^(-1/2)`` of a zero-mean Gaussian state."""
    cov = _check_square_symmetric(cov)
    det = np.linalg.det(cov)
    if det <= 0:
        raise DomainError(f"covariance determinant must be positive, got {det}")
    return float(det ** -0.5)


def wigner(cov, point):
    """Wigner function ``exp(-x^T sigma^-1 x) / (pi^n sqrt(det sigma))`` at ``point``.

    ``point`` may also be a stack of points with shape ``(..., 2n)``.
    """
    cov = _check_square_symmetric(cov)
    dim = cov.shape[0]
    xi = np.asarray(point, dtype=float)
    if xi.shape[-1] != dim:
        raise ValueError(f"phase point has length {xi.shape[-1]}, expected {dim}")
    if np.linalg.cond(cov) > CONDITION_LIMIT:
        raise SingularCovarianceError("covariance condition number exceeds 1e12")
    factor = linalg.cho_factor(cov)
    flat = xi.reshape(-1, dim)
    solved = linalg.cho_solve(factor, flat.T).T
    quad = np.einsum("ij,ij->i", flat, solved)
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    norm = math.pi ** (dim // 2) * math.exp(0.5 * log_det)
    values = np.exp(-quad) / norm
    if xi.ndim == 1:
        return float(values[0])
    return values.reshape(xi.shape[:-1])


def a_from_squeezing(r):
    """Mixedness factor of the three-mode state made from squeezing ``r`` on a tritter."""
    if not r >= 0:
        raise DomainError(f"squeezing must be non-negative, got r={r}")
    return math.sqrt(5.0 + 4.0 * math.cosh(2.0 * r)) / 3.0
