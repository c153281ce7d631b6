"""Pseudospin measurements on the three-mode squeezed (GHZ-like) Gaussian state.

The state is handled in the Fock basis up to a total photon number ``cutoff``.
A single-mode pseudospin only acts inside the pairs ``{|2m>, |2m+1>}``, so each
mode splits into a pair index and a parity bit. Correlators then reduce to
traces against an 8 x 8 matrix over the three parity bits, which can be built
exactly for cutoffs in the thousands; the explicit amplitude tensor is kept for
small cutoffs and for cross-checks.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize
from scipy.special import gammaln, logsumexp

from .gaussian import DomainError
from .svetlichny import FullCorrelationTable, svetlichny_general, svetlichny_tensor

TAIL_TOL = 1e-8
LEAKAGE_TOL = 1e-8
MAX_TENSOR_ELEMENTS = 30_000_000
LOG_OVERFLOW = 700.0
SHELL_MARGIN = 60.0
# automatic cutoffs aim below tail_tol / CUTOFF_HEADROOM so that a renormalized
# expectation moves by less than tail_tol when the cutoff is raised further
CUTOFF_HEADROOM = 4.0

MODES = ("a", "b", "c")
_SVETLICHNY3 = svetlichny_tensor(3)

# (theta, phi) per mode for setting 0 and setting 1, from the fixed-setting construction
FIXED_SETTINGS = (
    ((0.0, math.pi / 2), (math.pi / 2, math.pi / 2)),
    ((math.pi / 4, math.pi / 2), (3 * math.pi / 4, math.pi / 2)),
    ((0.0, -math.pi / 2), (-math.pi / 2, -math.pi / 2)),
)


class TailToleranceError(RuntimeError):
    """The Fock cutoff discards more probability than the configured tolerance."""


class PrecisionError(ArithmeticError):
    """An intermediate log-magnitude left the range where results are trustworthy."""


class ParityViolationError(ValueError):
    """State has weight on odd total photon numbers."""


class LeakageWarning(RuntimeWarning):
    pass


def _lfact(k):
    return gammaln(np.asarray(k, dtype=float) + 1.0)


def _log_tanh(r):
    return -math.inf if r == 0 else math.log(math.tanh(r))


def shell_log_prefactor(total, log_tanh, log_cosh=0.0):
    """Log of ``cosh(r)^-1/2 (2n)!/n! (tanh r / 6)^n`` for even ``total = 2n``; ``-inf`` for odd."""
    total = np.asarray(total)
    safe = np.maximum(total, 0)
    n = safe / 2.0
    with np.errstate(invalid="ignore"):
        power = np.where(n == 0, 0.0, n * (log_tanh - math.log(6.0)))
    out = -0.5 * log_cosh + _lfact(safe) - _lfact(n) + power
    return np.where((total % 2 == 0) & (total >= 0), out, -np.inf)


def shell_log_weights(r, n_max):
    """Log probabilities ``log[binom(2n, n) (tanh r / 2)^(2n) / cosh r]`` for shells ``n = 0..n_max``."""
    n = np.arange(n_max + 1, dtype=float)
    log_tanh = _log_tanh(r)
    with np.errstate(invalid="ignore"):
        power = np.where(n == 0, 0.0, 2 * n * (log_tanh - math.log(2.0)))
    return _lfact(2 * n) - 2 * _lfact(n) + power - math.log(math.cosh(r))


def norm_deficit(r, cutoff):
    """Probability carried by shells above ``cutoff``, summed from the tail."""
    if r == 0:
        return 0.0
    first = cutoff // 2 + 1
    log_t2 = 2 * math.log(math.tanh(r))
    total = 0.0
    chunk = 4096
    start = first
    while True:
        n = np.arange(start, start + chunk, dtype=float)
        logw = _lfact(2 * n) - 2 * _lfact(n) + 2 * n * (_log_tanh(r) - math.log(2.0)) - math.log(math.cosh(r))
        w = np.exp(logw)
        total += float(np.sum(w))
        # remaining tail is bounded by a geometric series in tanh^2
        if logw[-1] - math.log(-math.expm1(log_t2)) < math.log(max(total, 1e-300)) - 40:
            return total
        start += chunk


def auto_cutoff(r, tail_tol=TAIL_TOL):
    """Smallest even cutoff whose norm deficit is below ``tail_tol / CUTOFF_HEADROOM``."""
    if r < 0:
        raise DomainError(f"squeezing must be non-negative, got r={r}")
    if r == 0:
        return 0
    tail_tol = tail_tol / CUTOFF_HEADROOM
    lo, hi = 0, 2
    while norm_deficit(r, hi) >= tail_tol:
        lo, hi = hi, hi * 2
    while hi - lo > 2:
        mid = (lo + hi) // 4 * 2
        if norm_deficit(r, mid) >= tail_tol:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class TruncatedTripartiteState:
    """Three-mode state with real amplitudes on total photon numbers ``<= cutoff``.

    ``amplitudes`` is the raw truncated tensor; expectation values are taken in
    the renormalized truncated state.
    """

    r: float
    cutoff: int
    norm_deficit: float
    tail_tol: float = TAIL_TOL
    _tensor: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def norm_squared(self):
        if self._tensor is not None:
            return float(np.sum(np.abs(self._tensor) ** 2))
        return 1.0 - self.norm_deficit

    @cached_property
    def amplitudes(self):
        """Amplitude tensor of shape ``(cutoff + 2,) * 3`` (even per-mode dimension)."""
        if self._tensor is not None:
            return self._tensor
        dim = self.cutoff + 2
        if dim ** 3 > MAX_TENSOR_ELEMENTS:
            raise MemoryError(f"cutoff {self.cutoff} is too large for an explicit amplitude tensor")
        k = np.arange(dim)
        k1, k2, k3 = np.meshgrid(k, k, k, indexing="ij")
        total = k1 + k2 + k3
        # summing in sorted order keeps the tensor exactly symmetric under mode swaps
        lf = np.sort(_lfact(np.stack([k1, k2, k3])), axis=0)
        logc = (
            shell_log_prefactor(total, _log_tanh(self.r), math.log(math.cosh(self.r)))
            - 0.5 * (lf[0] + lf[1] + lf[2])
        )
        out = np.where(total <= self.cutoff, np.exp(logc), 0.0)
        out.setflags(write=False)
        return out

    @cached_property
    def pair_matrix(self):
        """Real 8 x 8 reduced matrix over the parity bits of modes a, b, c (normalized)."""
        if self._tensor is not None:
            return pair_matrix_from_tensor(self._tensor)
        return _pair_matrix_closed_form(self.r, self.cutoff) / self.norm_squared


def ghz_state_fock(r, cutoff=None, tail_tol=TAIL_TOL, check_tail=True):
    """Fock expansion of the three-mode squeezed state with squeezing ``r``.

    ``cutoff=None`` picks the smallest even cutoff meeting ``tail_tol``.
    """
    if not r >= 0:
        raise DomainError(f"squeezing must be non-negative, got r={r}")
    if cutoff is None:
        cutoff = auto_cutoff(r, tail_tol)
    if cutoff < 0 or cutoff % 2:
        raise DomainError(f"cutoff must be a non-negative even integer, got {cutoff}")
    deficit = norm_deficit(r, cutoff)
    if check_tail and deficit > tail_tol:
        raise TailToleranceError(
            f"cutoff {cutoff} leaves norm deficit {deficit:.3e} > {tail_tol:.1e} at r={r}"
        )
    return TruncatedTripartiteState(float(r), int(cutoff), deficit, tail_tol)


def state_from_tensor(tensor):
    """Wrap an explicit amplitude tensor; ``r`` and ``cutoff`` are then informational only."""
    tensor = np.asarray(tensor)
    deficit = 1.0 - float(np.sum(np.abs(tensor) ** 2))
    return TruncatedTripartiteState(float("nan"), -1, deficit, math.inf, tensor)


# single-mode pseudospin algebra


def pseudospin_matrix(theta, phi):
    """2 x 2 action of the pseudospin on a pair ``(|2m>, |2m+1>)``."""
    return np.array(
        [
            [-math.cos(theta), math.sin(theta) * np.exp(1j * phi)],
            [math.sin(theta) * np.exp(-1j * phi), math.cos(theta)],
        ]
    )


def bloch_vector(theta, phi):
    """Pauli components of the pseudospin in the (even, odd) parity-bit basis."""
    return np.array([math.sin(theta) * math.cos(phi), -math.sin(theta) * math.sin(phi), -math.cos(theta)])


def canonical_angles(theta, phi):
    """Map ``(theta, phi)`` to the equivalent pair with ``theta in [0, pi]``, ``phi in (-pi, pi]``."""
    theta = math.remainder(theta, 2 * math.pi)
    if theta < 0:
        theta, phi = -theta, phi + math.pi
    phi = math.remainder(phi, 2 * math.pi)
    if phi == -math.pi:
        phi = math.pi
    return theta, phi


@dataclass(frozen=True)
class PseudospinSettingSet:
    """Angles ``(theta, phi)`` for each mode (a, b, c) and choice (0, 1); shape ``(3, 2, 2)``."""

    angles: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.angles, dtype=float)
        if raw.shape != (3, 2, 2):
            raw = raw.reshape(3, 2, 2)
        if not np.all(np.isfinite(raw)):
            raise ValueError("pseudospin angles must be finite")
        canon = np.array([[canonical_angles(*raw[j, x]) for x in range(2)] for j in range(3)])
        canon.setflags(write=False)
        object.__setattr__(self, "angles", canon)

    @classmethod
    def fixed(cls):
        return cls(np.array(FIXED_SETTINGS))

    def setting(self, mode, choice):
        return tuple(self.angles[MODES.index(mode) if isinstance(mode, str) else mode, choice])

    def flat(self):
        return self.angles.reshape(-1).copy()


def _mode_axis(mode):
    if isinstance(mode, str):
        return MODES.index(mode)
    return int(mode)


def apply_pseudospin(tensor, mode, setting):
    """Apply the pseudospin with ``setting = (theta, phi)`` to one axis of a Fock tensor.

    Returns ``(new_tensor, leakage)``. If the axis has odd length, its top
    level has no partner inside the box; the raised component is dropped and
    its amplitude norm is returned as ``leakage``.
    """
    theta, phi = setting
    axis = _mode_axis(mode)
    psi = np.moveaxis(np.asarray(tensor, dtype=complex), axis, 0)
    dim = psi.shape[0]
    paired = dim - dim % 2
    out = np.zeros_like(psi)
    block = psi[:paired].reshape(paired // 2, 2, *psi.shape[1:])
    mat = pseudospin_matrix(theta, phi)
    out[:paired] = np.einsum("ij,mj...->mi...", mat, block).reshape(paired, *psi.shape[1:])
    leakage = 0.0
    if dim % 2:
        top = psi[dim - 1]
        out[dim - 1] = -math.cos(theta) * top
        leakage = abs(math.sin(theta)) * float(np.linalg.norm(top))
    return np.moveaxis(out, 0, axis), leakage


def correlation_from_tensor(tensor, settings):
    """``<psi| Z^a Z^b Z^c |psi> / <psi|psi>`` by explicit tensor contraction.

    Returns ``(value, leakage)``.
    """
    psi = np.asarray(tensor)
    phi = psi
    leakage = 0.0
    for axis, setting in enumerate(settings):
        phi, leak = apply_pseudospin(phi, axis, setting)
        leakage += leak
    value = np.vdot(psi, phi) / np.vdot(psi, psi)
    if abs(value.imag) > 1e-10:
        raise ArithmeticError(f"correlator has imaginary part {value.imag:.2e}")
    return float(value.real), leakage


def pair_matrix_from_tensor(tensor):
    """Reduced matrix over parity bits, tracing out pair indices, from an explicit tensor."""
    psi = np.asarray(tensor)
    dims = [d - d % 2 for d in psi.shape]
    psi = psi[: dims[0], : dims[1], : dims[2]]
    split = psi.reshape(dims[0] // 2, 2, dims[1] // 2, 2, dims[2] // 2, 2)
    bits = np.transpose(split, (1, 3, 5, 0, 2, 4)).reshape(8, -1)
    rho = bits @ bits.conj().T
    return rho / np.trace(rho).real


def _log_convolve(x, y, length):
    """``log sum_i exp(x[i] + y[s - i])`` for ``s < length``."""
    i = np.arange(length)[:, None]
    s = np.arange(length)[None, :]
    j = s - i
    valid = (j >= 0) & (i < x.size) & (j < y.size)
    terms = np.where(valid, x[np.minimum(i, x.size - 1)] + y[np.clip(j, 0, y.size - 1)], -np.inf)
    return logsumexp(terms, axis=0)


def _pair_matrix_closed_form(r, cutoff):
    """Unnormalized pair matrix from the shell structure of the amplitudes.

    Entry ``(b, b')`` sums ``c[2m + b] c[2m + b']`` over pair indices; the
    amplitudes factor into a shell prefactor times ``prod_j 1/sqrt(k_j!)``,
    so the sum over pair indices with fixed ``M = sum m_j`` is a three-fold
    convolution of single-mode weights.
    """
    log_tanh = _log_tanh(r)
    log_cosh = math.log(math.cosh(r))
    m_max = cutoff // 2
    length = m_max + 1
    m = np.arange(length)
    single = {
        (0, 0): -_lfact(2 * m),
        (1, 1): -_lfact(2 * m + 1),
        (0, 1): -0.5 * (_lfact(2 * m) + _lfact(2 * m + 1)),
    }
    conv_cache = {}

    def conv(kinds):
        key = tuple(sorted(kinds))
        if key not in conv_cache:
            first = _log_convolve(single[key[0]], single[key[1]], length)
            conv_cache[key] = _log_convolve(first, single[key[2]], length)
        return conv_cache[key]

    rho = np.zeros((8, 8))
    even = [b for b in range(8) if bin(b).count("1") % 2 == 0]
    big_m = np.arange(length)
    for b in even:
        bb = [(b >> (2 - j)) & 1 for j in range(3)]
        for bp in even:
            if bp < b:
                continue
            bpp = [(bp >> (2 - j)) & 1 for j in range(3)]
            kinds = [tuple(sorted((x, y))) for x, y in zip(bb, bpp)]
            w = sum(bb)
            wp = sum(bpp)
            t1 = 2 * big_m + w
            t2 = 2 * big_m + wp
            ok = (t1 <= cutoff) & (t2 <= cutoff)
            lp = shell_log_prefactor(t1, log_tanh, log_cosh) + shell_log_prefactor(t2, log_tanh, log_cosh)
            terms = np.where(ok, lp + conv(kinds), -np.inf)
            rho[b, bp] = rho[bp, b] = math.exp(logsumexp(terms)) if np.any(ok) else 0.0
    return rho


def _as_pair_matrix(state):
    if isinstance(state, TruncatedTripartiteState):
        return state.pair_matrix
    return pair_matrix_from_tensor(state)


def correlation(state, settings):
    """Correlator ``<Z^a(xi_a) Z^b(xi_b) Z^c(xi_c)>`` for three ``(theta, phi)`` pairs."""
    rho = _as_pair_matrix(state)
    op = np.kron(np.kron(pseudospin_matrix(*settings[0]), pseudospin_matrix(*settings[1])), pseudospin_matrix(*settings[2]))
    value = np.trace(rho @ op)
    if abs(value.imag) > 1e-10:
        raise ArithmeticError(f"correlator has imaginary part {value.imag:.2e}")
    return float(value.real)


_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def pauli_correlations(state):
    """Real tensor ``T[i, j, k] = tr(rho sigma_i (x) sigma_j (x) sigma_k)`` over x, y, z."""
    rho = _as_pair_matrix(state).reshape(2, 2, 2, 2, 2, 2)
    t = np.einsum("abcdef,ida,jeb,kfc->ijk", rho, _PAULI, _PAULI, _PAULI)
    return t.real


def correlation_table(state, setting_set):
    """Eight correlators indexed by ``(x_a, x_b, x_c)``, ``x_a`` most significant."""
    table = np.empty(8)
    for idx in range(8):
        xs = [(idx >> (2 - j)) & 1 for j in range(3)]
        table[idx] = correlation(state, [setting_set.angles[j, xs[j]] for j in range(3)])
    return table


def svetlichny_pseudospin(state, setting_set):
    """Three-party Svetlichny parameter from pseudospin correlators."""
    table = np.clip(correlation_table(state, setting_set), -1.0, 1.0)
    return svetlichny_general(FullCorrelationTable(3, table))


def _zx_zx_expectation(r, cutoff):
    """Unnormalized ``<psi| Zx^b Zx^c |psi>`` from the closed-form shell coefficients."""
    log_tanh = _log_tanh(r)
    log_cosh = math.log(math.cosh(r))
    lf = _lfact(np.arange(cutoff + 3))

    def lp(t):
        t = np.asarray(t)
        inside = (t >= 0) & (t <= cutoff)
        return np.where(inside, shell_log_prefactor(np.clip(t, 0, None), log_tanh, log_cosh), -np.inf)

    # sums over k2 + k3 = s of the b, c factors for each parity class
    g_up = np.full(cutoff + 1, -np.inf)
    g_down = np.full(cutoff + 1, -np.inf)
    g_same = np.full(cutoff + 1, -np.inf)
    for s in range(cutoff + 1):
        k2 = np.arange(s + 1)
        k3 = s - k2
        base = -0.5 * (lf[k2] + lf[k3])
        ee = (k2 % 2 == 0) & (k3 % 2 == 0)
        oo = (k2 % 2 == 1) & (k3 % 2 == 1)
        eo = (k2 % 2 == 0) & (k3 % 2 == 1)
        oe = (k2 % 2 == 1) & (k3 % 2 == 0)
        if ee.any():
            g_up[s] = logsumexp(base[ee] - 0.5 * (lf[k2[ee] + 1] + lf[k3[ee] + 1]))
        if oo.any():
            g_down[s] = logsumexp(base[oo] - 0.5 * (lf[k2[oo] - 1] + lf[k3[oo] - 1]))
        parts = []
        if eo.any():
            parts.append(base[eo] - 0.5 * (lf[k2[eo] + 1] + lf[k3[eo] - 1]))
        if oe.any():
            parts.append(base[oe] - 0.5 * (lf[k2[oe] - 1] + lf[k3[oe] + 1]))
        if parts:
            g_same[s] = logsumexp(np.concatenate(parts))

    logs = []
    s = np.arange(cutoff + 1)
    for k1 in range(cutoff + 1):
        ss = s[: cutoff - k1 + 1]
        ss = ss[(k1 + ss) % 2 == 0]
        t = k1 + ss
        head = lp(t) - lf[k1]
        terms = np.concatenate([
            head + lp(t + 2) + g_up[ss],
            head + lp(t - 2) + g_down[ss],
            head + lp(t) + g_same[ss],
        ])
        logs.append(logsumexp(terms))
    return math.exp(logsumexp(np.array(logs)))


def zx_zx_expectation(state):
    """``<Zx^b Zx^c>`` in the normalized truncated state."""
    if state._tensor is not None:
        psi = np.asarray(state._tensor)
        phi, _ = apply_pseudospin(psi, 1, (math.pi / 2, 0.0))
        phi, _ = apply_pseudospin(phi, 2, (math.pi / 2, 0.0))
        return float((np.vdot(psi, phi) / np.vdot(psi, psi)).real)
    return _zx_zx_expectation(state.r, state.cutoff) / state.norm_squared


def _odd_weight(state):
    if state._tensor is not None:
        t = np.asarray(state._tensor)
        idx = np.indices(t.shape).sum(axis=0)
        return float(np.sqrt(np.sum(np.abs(t[idx % 2 == 1]) ** 2)))
    return 0.0


def svetlichny_fixed_settings(state):
    """``S_3 = (sqrt 2 / 4)(1 + 3 <Zx^b Zx^c>)`` at the fixed pseudospin settings."""
    odd = _odd_weight(state)
    if odd > 1e-10:
        raise ParityViolationError(f"state has odd-parity weight {odd:.2e}")
    return math.sqrt(2) / 4 * (1 + 3 * zx_zx_expectation(state))


def _image_under_zxzx(k2, k3):
    """Image ``(k2', k3')`` of ``|k2, k3>`` under ``Zx (x) Zx``."""
    return k2 + np.where(k2 % 2 == 0, 1, -1), k3 + np.where(k3 % 2 == 0, 1, -1)


def _shell_indices(total, margin=None):
    """Triples on the shell ``k1 + k2 + k3 = total`` with ``k2 <= k3``, plus their multiplicity.

    With ``margin`` set, only triples whose multinomial weight lies within
    ``exp(-margin)`` of the peak are kept; by Pinsker's inequality a log drop of
    ``margin`` needs ``|k1 - total/3| > sqrt(margin * total / 2)`` or
    ``|k2 - s/2| > sqrt(margin * s / 2)`` with ``s = k2 + k3``.
    """
    k1_all = np.arange(total + 1)
    if margin is not None:
        w1 = math.sqrt(margin * total / 2.0) + 2
        k1_all = k1_all[np.abs(k1_all - total / 3.0) <= w1]
    s = total - k1_all
    hi = s // 2
    if margin is None:
        lo = np.zeros_like(hi)
    else:
        lo = np.maximum(0, np.floor(s / 2.0 - np.sqrt(margin * s / 2.0) - 2)).astype(int)
    counts = hi - lo + 1
    k1 = np.repeat(k1_all, counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    k2 = np.arange(k1.size) - starts + np.repeat(lo, counts)
    k3 = total - k1 - k2
    return k1, k2, k3, np.where(k2 == k3, 1.0, 2.0)


def shell_residual_sum(total, log_tanh, cutoff=None, margin=SHELL_MARGIN):
    """``sum_{k1+k2+k3 = total} R_k`` with ``R_k = (c_k - c_k')^2`` in units where ``cosh r = 1``.

    ``k'`` is the image of ``k`` under ``Zx^b Zx^c``; amplitudes above
    ``cutoff`` are zero. Magnitudes are combined in log space.
    """
    # R is symmetric under k2 <-> k3, so only k2 <= k3 is visited
    k1, k2, k3, mult = _shell_indices(total, margin)
    j2, j3 = _image_under_zxzx(k2, k3)
    lf = _lfact(np.arange(total + 3))
    head = -0.5 * lf[k1]
    la = shell_log_prefactor(total, log_tanh) + head - 0.5 * (lf[k2] + lf[k3])
    shift = (j2 + j3) - (k2 + k3)
    img_pref = {d: float(shell_log_prefactor(total + d, log_tanh)) for d in (-2, 0, 2)}
    if cutoff is not None:
        if total > cutoff:
            la = np.full_like(la, -np.inf)
        for d in img_pref:
            if total + d > cutoff:
                img_pref[d] = -np.inf
    pref_b = np.select([shift == -2, shift == 0], [img_pref[-2], img_pref[0]], img_pref[2])
    lb = pref_b + head - 0.5 * (lf[j2] + lf[j3])
    hi = np.maximum(la, lb)
    if np.any(hi > LOG_OVERFLOW):
        raise PrecisionError(f"log-amplitude {hi.max():.1f} overflows in shell {total}")
    lo = np.minimum(la, lb)
    with np.errstate(invalid="ignore"):
        gap = np.where(np.isfinite(hi), lo - hi, -np.inf)
        terms = mult * np.exp(2 * hi) * np.expm1(gap) ** 2
    return float(np.sum(np.where(np.isfinite(hi), terms, 0.0)))


def shell_term_f(n):
    """Infinite-squeezing limit of the residual weight carried by the shell ``k1+k2+k3 = 2n``."""
    if n < 0:
        raise DomainError(f"shell index must be non-negative, got {n}")
    return shell_residual_sum(2 * int(n), 0.0)


def f_sequence(ns, executor=None):
    """``shell_term_f`` over ``ns``; results keep the input order."""
    ns = [int(n) for n in ns]
    if executor is None:
        return np.array([shell_term_f(n) for n in ns])
    return np.array(list(executor.map(shell_term_f, ns)))


def residual_norm(r, cutoff=None, tail_tol=TAIL_TOL):
    """``|| psi - Zx^b Zx^c psi ||`` for the normalized truncated state, from shell sums."""
    state = ghz_state_fock(r, cutoff, tail_tol)
    log_tanh = _log_tanh(r)
    # shells up to the cutoff, plus the shell two above it that receives lowered components
    total = sum(shell_residual_sum(t, log_tanh, state.cutoff) for t in range(0, state.cutoff + 3, 2))
    return math.sqrt(total / math.cosh(r) / state.norm_squared)


def fit_power_law(ns, fs, window=None):
    """Least-squares line in log-log coordinates; returns ``(prefactor, exponent)``.

    ``window=(lo, hi)`` restricts the fit to ``lo <= n <= hi``; by default the
    upper half of the supplied range is used.
    """
    ns = np.asarray(ns, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if ns.shape != fs.shape:
        raise ValueError("ns and fs must have equal length")
    if window is None:
        window = (0.5 * (ns.min() + ns.max()) if ns.size else 0.0, math.inf)
    mask = (ns >= window[0]) & (ns <= window[1])
    x, y = ns[mask], fs[mask]
    if x.size < 3:
        raise ValueError(f"need at least 3 points to fit a power law, got {x.size}")
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("power-law fit needs positive n and f(n)")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(math.exp(intercept)), float(slope)


@dataclass(frozen=True)
class PseudospinOptimum:
    s_opt: float
    settings: PseudospinSettingSet
    converged: bool
    seed: str


def _bloch_vectors(angles):
    ang = angles.reshape(3, 2, 2)
    theta, phi = ang[..., 0], ang[..., 1]
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), -st * np.sin(phi), -np.cos(theta)], axis=-1)


def _svetlichny_from_pauli(t, angles):
    vecs = _bloch_vectors(angles)
    corr = np.einsum("ijk,xi,yj,zk->xyz", t, vecs[0], vecs[1], vecs[2], optimize=False)
    return float(np.sum(_SVETLICHNY3 * corr))


def optimize_pseudospin_settings(state, n_starts=20, seed=0, extra_seeds=()):
    """Maximize the pseudospin Svetlichny parameter over all twelve angles.

    Simplex searches start from the fixed settings, any ``extra_seeds`` and
    ``n_starts`` random angle sets drawn with ``seed``.
    """
    t = pauli_correlations(state)
    rng = np.random.default_rng(seed)
    starts = [("fixed", PseudospinSettingSet.fixed().flat())]
    starts += [(f"warm[{i}]", np.asarray(s, dtype=float).reshape(-1)) for i, s in enumerate(extra_seeds)]
    for i in range(n_starts):
        ang = np.empty((3, 2, 2))
        ang[..., 0] = rng.uniform(0, math.pi, (3, 2))
        ang[..., 1] = rng.uniform(-math.pi, math.pi, (3, 2))
        starts.append((f"random[{i}]", ang.reshape(-1)))

    def neg(x):
        return -_svetlichny_from_pauli(t, x)

    found = []
    for label, x0 in starts:
        res = optimize.minimize(
            neg, x0, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxfev": 3000, "adaptive": True},
        )
        found.append((-res.fun, label, res.x))
    # stable sort keeps seed order among ties
    found.sort(key=lambda item: -item[0])
    best = (-math.inf, None, False, "")
    for _, label, x in found[:3]:
        res = optimize.minimize(neg, x, method="Powell", options={"xtol": 1e-10, "ftol": 1e-15})
        if -res.fun > best[0] + 1e-13:
            best = (-res.fun, res.x, bool(res.success), label)
    val, x, ok, label = best
    return PseudospinOptimum(float(val), PseudospinSettingSet(x.reshape(3, 2, 2)), ok, label)


def cutoff_stability(r, tail_tol=TAIL_TOL):
    """Change of the fixed-setting ``S_3`` when the auto-selected cutoff is doubled."""
    cutoff = auto_cutoff(r, tail_tol)
    s1 = svetlichny_fixed_settings(ghz_state_fock(r, cutoff, tail_tol))
    s2 = svetlichny_fixed_settings(ghz_state_fock(r, 2 * cutoff, tail_tol))
    return abs(s2 - s1)


def warn_on_leakage(leakage):
    if leakage > LEAKAGE_TOL:
        warnings.warn(f"pseudospin leakage {leakage:.2e} exceeds {LEAKAGE_TOL:.0e}", LeakageWarning, stacklevel=2)
