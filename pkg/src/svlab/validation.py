"""Fast cross-checks between independent routes to the same quantities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import parity, pseudospin
from .gaussian import SymmetricGaussianState
from .svetlichny import FullCorrelationTable, coefficients, hamming_weights, svetlichny_general


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def symmetric_vs_general(coefficient_table=coefficients, n_values=range(2, 8), trials=20, seed=0, tol=1e-12):
    """Symmetric Svetlichny sum against the recursive definition on expanded tables."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in n_values:
        weights = hamming_weights(n)
        for _ in range(trials):
            e = rng.uniform(-1, 1, n + 1)
            sym = float(np.dot(coefficient_table(n), e) / 2 ** -((-n) // 2))
            gen = svetlichny_general(FullCorrelationTable(n, e[weights]))
            worst = max(worst, abs(sym - gen))
    return CheckResult("symmetric-vs-general", worst <= tol, f"max deviation {worst:.2e}")


def parity_vs_wigner(samples=100, seed=0, tol=1e-10):
    """Closed-form ``E^m_n`` against ``pi^n`` times the Gaussian Wigner function."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 6))
        state = SymmetricGaussianState(n, float(rng.uniform(1.0, 3.0)))
        settings = parity.ParitySettings(*rng.uniform(-1, 1, 4))
        m = int(rng.integers(0, n + 1))
        fast = parity.correlation_Emn(state, settings, m)
        slow = parity.correlation_via_wigner(state, settings, m)
        worst = max(worst, abs(fast - slow) / abs(slow))
    return CheckResult("parity-vs-wigner", worst <= tol, f"max relative deviation {worst:.2e}")


def fixed_vs_general(r_values=(0.0, 1.0, 2.0, 3.0), tol=1e-9):
    """Simplified fixed-setting ``S_3`` against the eight-correlator evaluation."""
    worst = 0.0
    settings = pseudospin.PseudospinSettingSet.fixed()
    for r in r_values:
        state = pseudospin.ghz_state_fock(r)
        worst = max(worst, abs(pseudospin.svetlichny_fixed_settings(state) - pseudospin.svetlichny_pseudospin(state, settings)))
    return CheckResult("fixed-vs-general", worst <= tol, f"max deviation {worst:.2e}")


def dense_operator_oracle(r=0.8, cutoff=6, samples=10, seed=0, tol=1e-12):
    """Pair-matrix correlators against dense Kronecker-product operators."""
    rng = np.random.default_rng(seed)
    state = pseudospin.ghz_state_fock(r, cutoff, check_tail=False)
    psi = np.asarray(state.amplitudes, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    dim = state.cutoff + 2
    worst = 0.0
    for _ in range(samples):
        angles = rng.uniform(-math.pi, math.pi, (3, 2))
        op = np.ones((1, 1))
        for theta, phi in angles:
            op = np.kron(op, dense_pseudospin(theta, phi, dim))
        dense = float(np.vdot(psi, op @ psi).real)
        fast = pseudospin.correlation(state, angles)
        worst = max(worst, abs(dense - fast))
    return CheckResult("dense-operator-oracle", worst <= tol, f"max deviation {worst:.2e}")


def tail_tolerance(r=2.0, cutoff=None, tail_tol=pseudospin.TAIL_TOL):
    """Cutoff policy meets the norm-deficit bound."""
    try:
        state = pseudospin.ghz_state_fock(r, cutoff, tail_tol)
    except pseudospin.TailToleranceError as exc:
        return CheckResult("tail-tolerance", False, str(exc))
    return CheckResult("tail-tolerance", True, f"cutoff {state.cutoff}, deficit {state.norm_deficit:.2e}")


def dense_pseudospin(theta, phi, dim):
    """Single-mode pseudospin as a dense ``dim x dim`` matrix built from its ladder definition."""
    zz = np.diag([1.0 if k % 2 else -1.0 for k in range(dim)]).astype(complex)
    zplus = np.zeros((dim, dim), dtype=complex)
    for k in range(0, dim - 1, 2):
        zplus[k + 1, k] = 1.0
    return math.cos(theta) * zz + math.sin(theta) * (np.exp(-1j * phi) * zplus + np.exp(1j * phi) * zplus.conj().T)


def run_all(cutoff=None):
    return [
        symmetric_vs_general(),
        parity_vs_wigner(),
        fixed_vs_general(),
        dense_operator_oracle(),
        tail_tolerance(cutoff=cutoff),
    ]
