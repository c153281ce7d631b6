"""Svetlichny and Mermin-Klyshko combinatorics for dichotomic two-setting scenarios.

Correlation tables for ``n`` parties are arrays of length ``2**n`` indexed by the
setting bit-string ``(x1, ..., xn)`` with ``x1`` as the most significant bit, or
equivalently arrays of shape ``(2,) * n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gaussian import DomainError

BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class SymmetricCorrelations:
    """Correlators ``E[m]`` with ``m`` parties at setting 1 and ``n - m`` at setting 0."""

    n: int
    E: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.E, dtype=float)
        if self.n < 2 or values.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} correlators for n={self.n}, got {values.shape}")
        if np.any(np.abs(values) > 1 + BOUND_SLACK):
            raise ValueError("correlators must lie in [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "E", values)

    def expand(self):
        """Full permutation-invariant table of ``2**n`` correlators."""
        weights = hamming_weights(self.n)
        return FullCorrelationTable(self.n, self.E[weights])


@dataclass(frozen=True)
class FullCorrelationTable:
    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size != 2 ** self.n:
            raise ValueError(f"table for n={self.n} needs {2 ** self.n} entries, got {values.size}")
        if np.any(np.abs(values) > 1 + BOUND_SLACK):
            raise ValueError("correlators must lie in [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def hamming_weights(n):
    """Number of ones in each ``n``-bit setting string, in table order."""
    idx = np.arange(2 ** n)
    return np.array([bin(i).count("1") for i in idx])


def _ceil_div(num, den):
    return -((-num) // den)


def coefficient(n, m):
    """Signed weight ``B^m_n`` of ``E^m_n`` in the symmetric Svetlichny sum."""
    if not 0 <= m <= n:
        raise DomainError(f"m must lie in [0, {n}], got {m}")
    # only the parity of the (possibly negative) ceiling matters
    exponent = _ceil_div(n - 2 * (m + 1), 4)
    sign = -1 if exponent % 2 else 1
    return sign * math.comb(n, m)


@lru_cache(maxsize=None)
def coefficients(n):
    return np.array([coefficient(n, m) for m in range(n + 1)], dtype=float)


def svetlichny_symmetric(corr):
    """``S_n = 2^-ceil(n/2) sum_m B^m_n E[m]`` for permutation-invariant correlators."""
    n = corr.n
    return float(np.dot(coefficients(n), corr.E) / 2 ** _ceil_div(n, 2))


def _flip(coeffs):
    """Swap the 0/1 setting labels on every party."""
    return coeffs[(slice(None, None, -1),) * coeffs.ndim]


@lru_cache(maxsize=None)
def _mermin_tensor(n, split):
    if n == 1:
        return np.array([1.0, 0.0])
    k = split if split is not None else 1
    if not 1 <= k <= n - 1:
        raise DomainError(f"split must satisfy 1 <= k <= {n - 1}, got {k}")
    # inner blocks always use the default split
    head = _mermin_tensor(n - k, None)
    tail = _mermin_tensor(k, None)
    head_bar, tail_bar = _flip(head), _flip(tail)
    out = 0.5 * np.multiply.outer(head, tail + tail_bar) + 0.5 * np.multiply.outer(head_bar, tail - tail_bar)
    out.setflags(write=False)
    return out


def mermin_klyshko_tensor(n, split=1):
    """Coefficient tensor of ``M_n`` over setting strings, built with outer split ``k``."""
    return _mermin_tensor(int(n), int(split) if n > 1 else None)


def svetlichny_tensor(n, split=1):
    """Coefficient tensor of ``S_n``: ``M_n`` for even n, ``(M_n + Mbar_n)/2`` for odd n."""
    m = mermin_klyshko_tensor(n, split)
    if n % 2 == 0:
        return m
    return 0.5 * (m + _flip(m))


def svetlichny_general(table, split=1):
    """Svetlichny parameter of an arbitrary correlation table via the Mermin-Klyshko recursion."""
    if not isinstance(table, FullCorrelationTable):
        values = np.asarray(table, dtype=float).reshape(-1)
        n = int(round(math.log2(values.size))) if values.size else 0
        if n < 1 or 2 ** n != values.size:
            raise ValueError(f"table length {values.size} is not a power of two")
        table = FullCorrelationTable(n, values)
    coeffs = svetlichny_tensor(table.n, split).reshape(-1)
    return float(np.dot(coeffs, table.values))


def quantum_bound(n):
    """Largest quantum value ``2^((n - 1 - n mod 2)/2)`` of ``S_n``."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    return 2.0 ** ((n - 1 - n % 2) / 2)
