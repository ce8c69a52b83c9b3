"""Integer partitions, partition-indexed Pochhammer symbols and the
multivariate gamma function.

Partitions are always produced in reverse-lexicographic order (the
partition with the largest first part first).  Series code relies on this
order both for deterministic summation and because it is a linear
extension of the dominance order used by the zonal recurrence.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, gammasgn

LOG_PI = math.log(math.pi)


class Partition(tuple):
    """Non-increasing tuple of positive integers.

    Trailing zeros are dropped on construction, so ``Partition((2, 1, 0))``
    equals ``Partition((2, 1))``.
    """

    __slots__ = ()

    def __new__(cls, parts=()):
        parts = tuple(int(p) for p in parts)
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must be non-increasing: {parts}")
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        return super().__new__(cls, parts)

    @property
    def weight(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def padded(self, size: int) -> tuple:
        if size < len(self):
            raise ValueError(f"{self} has more than {size} parts")
        return tuple(self) + (0,) * (size - len(self))

    def __repr__(self):
        return f"Partition({tuple(self)!r})"


def _partitions(k: int, max_length: int, max_part: int):
    if k == 0:
        yield ()
        return
    if max_length == 0:
        return
    for first in range(min(k, max_part), 0, -1):
        # remaining k - first must fit in max_length - 1 parts of size <= first
        if first * max_length < k:
            break
        for rest in _partitions(k - first, max_length - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=512)
def _enumerate_cached(k: int, max_length: int) -> tuple:
    return tuple(Partition(p) for p in _partitions(k, max_length, k))


def enumerate_partitions(k: int, max_length: int) -> list[Partition]:
    """All partitions of ``k`` with at most ``max_length`` parts.

    The result is in reverse-lexicographic order, e.g. for ``k=4``:
    ``(4), (3,1), (2,2), (2,1,1), (1,1,1,1)``.  ``k=0`` gives the single
    empty partition.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if max_length < 1:
        raise ValueError("max_length must be at least 1")
    return list(_enumerate_cached(int(k), int(min(max_length, max(k, 1)))))


def partition_array(k: int, max_length: int) -> np.ndarray:
    """Partitions of ``k`` as a zero-padded ``(count, max_length)`` int array."""
    parts = enumerate_partitions(k, max_length)
    out = np.zeros((len(parts), max_length), dtype=np.int64)
    for i, p in enumerate(parts):
        out[i, : len(p)] = p
    return out


def partition_count(k: int) -> int:
    """The partition function p(k), by Euler's pentagonal recurrence."""
    p = [1] + [0] * k
    for n in range(1, k + 1):
        total, j = 0, 1
        while True:
            g1 = j * (3 * j - 1) // 2
            if g1 > n:
                break
            sign = 1 if j % 2 else -1
            total += sign * p[n - g1]
            g2 = j * (3 * j + 1) // 2
            if g2 <= n:
                total += sign * p[n - g2]
            j += 1
        p[n] = total
    return p[k]


def rising_factorial(a: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= a + j
    return out


def log_rising_factorial(a, k):
    """Sign and log-magnitude of the rising factorial ``(a)_k``.

    Vectorised over ``a`` and ``k``.  Exact zeros (``a`` a non-positive
    integer with ``a + k > 0``) come back with sign 0 and log ``-inf``.
    """
    a = np.asarray(a, dtype=float)
    k = np.asarray(k, dtype=float)
    a, k = np.broadcast_arrays(a, k)
    sign = np.ones(a.shape)
    logv = np.zeros(a.shape)
    nz = k > 0
    if not nz.any():
        return sign, logv
    an, kn = a[nz], k[nz]
    top = an + kn
    a_pole = (an <= 0) & (an == np.round(an))
    top_pole = (top <= 0) & (top == np.round(top))
    s = np.empty(an.shape)
    lv = np.empty(an.shape)
    ok = ~a_pole
    s[ok] = gammasgn(top[ok]) * gammasgn(an[ok])
    lv[ok] = gammaln(top[ok]) - gammaln(an[ok])
    # (a)_k with a a non-positive integer: zero once the product crosses 0
    zero = a_pole & ~top_pole
    s[zero] = 0.0
    lv[zero] = -np.inf
    # both ends at poles: product of negative integers, use reflection
    both = a_pole & top_pole
    if both.any():
        # (a)_k = (-1)^k (1-a-k)_k = (-1)^k Gamma(1-a) / Gamma(1-a-k)
        ab, kb = an[both], kn[both]
        s[both] = np.where(kb % 2 == 0, 1.0, -1.0)
        lv[both] = gammaln(1 - ab) - gammaln(1 - ab - kb)
    sign[nz] = s
    logv[nz] = lv
    return sign, logv


def pochhammer_partition(a: float, kappa) -> float:
    """Generalized Pochhammer symbol ``prod_i (a - (i-1)/2)_{kappa_i}``.

    Returns exactly ``0.0`` as soon as one row factor vanishes.
    """
    out = 1.0
    for i, part in enumerate(kappa):
        row = rising_factorial(a - i / 2.0, part)
        if row == 0.0:
            return 0.0
        out *= row
    return out


def log_pochhammer_partition(a: float, kappa) -> tuple[float, float]:
    """Sign and log-magnitude of ``(a)_kappa`` (sign 0 for exact zeros)."""
    kappa = np.asarray(tuple(kappa), dtype=float)
    if kappa.size == 0:
        return 1.0, 0.0
    shifts = a - 0.5 * np.arange(kappa.size)
    s, lv = log_rising_factorial(shifts, kappa)
    if np.any(s == 0):
        return 0.0, -math.inf
    return float(np.prod(s)), float(np.sum(lv))


def log_pochhammer_rows(a: float, parts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``log_pochhammer_partition`` over a padded partition array."""
    parts = np.asarray(parts)
    shifts = a - 0.5 * np.arange(parts.shape[1])
    s, lv = log_rising_factorial(shifts[None, :], parts)
    sign = np.prod(s, axis=1)
    logv = np.where(sign == 0, -np.inf, np.sum(np.where(s == 0, 0.0, lv), axis=1))
    return sign, logv


def multivariate_log_gamma(m: int, c: float) -> float:
    """``log Gamma_m(c)``; requires ``c > (m-1)/2``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not c > (m - 1) / 2.0:
        raise ValueError(f"multivariate gamma needs c > (m-1)/2, got m={m}, c={c}")
    out = m * (m - 1) / 4.0 * LOG_PI
    for i in range(m):
        out += math.lgamma(c - i / 2.0)
    return out
