"""Zonal polynomials ``C_kappa`` in the monomial symmetric function basis.

Coefficients come from James' recurrence: for ``lam`` strictly below
``kappa`` in the dominance order,

    c[kappa, lam] = sum (lam_i - lam_j + 2t) c[kappa, mu] / (rho_kappa - rho_lam)

where ``mu`` runs over all raisings ``lam_i += t, lam_j -= t`` (``i < j``,
``1 <= t <= lam_j``) and ``rho_kappa = sum_i kappa_i (kappa_i - i)``.  The
recurrence is solved for the monic polynomials and each row is then scaled
by the leading coefficient of the C-normalization,
``2^k k! / prod_cells (2 arm + leg + 2)``.

Raisings never increase the number of parts, so a table restricted to
partitions of length ``<= p`` is closed; it is all that is needed to
evaluate ``C_kappa`` on ``p`` eigenvalues.  Tables are keyed by
``(degree, max_length)``.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import os
import struct
import tempfile
import time
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from . import kernels
from .partitions import Partition, enumerate_partitions, log_rising_factorial, partition_array

log = logging.getLogger(__name__)

MAX_DEGREE = 200
CACHE_ENV = "EWISHART_ZONAL_CACHE"
DEFAULT_CACHE_DIR = ".zonal-cache"

_MAGIC = b"EWZT"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIQI")  # magic, version, degree, max_length, count, nnz, crc32


class ZonalDegreeError(ValueError):
    """Requested degree exceeds the configured maximum."""


@dataclass(frozen=True)
class ZonalTable:
    """Coefficients of every ``C_kappa`` of one degree.

    ``coefficients[i, j]`` is the coefficient of the monomial symmetric
    function ``m_{partitions[j]}`` in ``C_{partitions[i]}``.  Rows and
    columns follow the reverse-lexicographic partition order, so the matrix
    is upper triangular.
    """

    degree: int
    max_length: int
    partitions: tuple
    coefficients: np.ndarray = field(repr=False)

    @property
    def parts(self) -> np.ndarray:
        return partition_array(self.degree, self.max_length)

    def index(self, kappa) -> int:
        return _index_map(self.degree, self.max_length)[Partition(kappa)]

    def row(self, kappa) -> dict:
        """Sparse coefficient vector of ``C_kappa`` as ``{lam: coefficient}``."""
        r = self.coefficients[self.index(kappa)]
        return {self.partitions[j]: float(r[j]) for j in np.flatnonzero(r)}

    @property
    def entries(self) -> dict:
        return {kappa: self.row(kappa) for kappa in self.partitions}


@lru_cache(maxsize=256)
def _index_map(k: int, max_length: int) -> dict:
    return {p: i for i, p in enumerate(enumerate_partitions(k, max_length))}


@lru_cache(maxsize=1024)
def subtable_index(k: int, short: int, long: int) -> np.ndarray:
    """Positions of the partitions with ``<= short`` parts inside the ``long`` table."""
    big = _index_map(k, long)
    return np.array([big[p] for p in enumerate_partitions(k, short)], dtype=np.int64)


def raising_graph(k: int, max_length: int):
    """Raisings of every partition of ``k`` (length ``<= max_length``) in CSR form.

    Returns ``(indptr, mu, weight, rho)``; see ``_recurrence_py``.
    """
    parts = partition_array(k, max_length)
    n, p = parts.shape
    idx = np.arange(n)
    ranks = np.arange(p)
    rho = (parts * (parts - 1 - ranks[None, :])).sum(axis=1).astype(float)

    lam_l, mu_l, w_l = [], [], []
    lookup = _row_lookup(parts, k)
    for i, j in itertools.combinations(range(p), 2):
        for t in range(1, parts[:, j].max(initial=0) + 1):
            rows = idx[parts[:, j] >= t]
            if rows.size == 0:
                break
            raised = parts[rows].copy()
            w = raised[:, i] - raised[:, j] + 2 * t
            raised[:, i] += t
            raised[:, j] -= t
            raised = -np.sort(-raised, axis=1)
            lam_l.append(rows)
            mu_l.append(lookup(raised))
            w_l.append(w)
    if lam_l:
        lam = np.concatenate(lam_l)
        mu = np.concatenate(mu_l)
        w = np.concatenate(w_l).astype(float)
        order = np.lexsort((mu, lam))
        lam, mu, w = lam[order], mu[order], w[order]
    else:
        lam = mu = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, lam + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, mu.astype(np.int64), np.ascontiguousarray(w), rho


def _row_lookup(parts: np.ndarray, k: int):
    n, p = parts.shape
    base = k + 1
    if p * math.log2(base) < 62:
        weights = base ** np.arange(p - 1, -1, -1, dtype=np.int64)
        keys = parts @ weights  # strictly decreasing in table order
        rev = keys[::-1]

        def lookup(rows):
            pos = np.searchsorted(rev, rows @ weights)
            return (n - 1 - pos).astype(np.int64)

        return lookup
    table = {tuple(r): i for i, r in enumerate(parts.tolist())}
    return lambda rows: np.array([table[tuple(r)] for r in rows.tolist()], dtype=np.int64)


def log_leading_coefficient(kappa) -> float:
    """log of the coefficient of ``m_kappa`` in ``C_kappa``."""
    kappa = tuple(kappa)
    k = sum(kappa)
    conj = [sum(1 for part in kappa if part > j) for j in range(kappa[0])] if kappa else []
    out = k * math.log(2.0) + math.lgamma(k + 1)
    for i, part in enumerate(kappa):
        for j in range(part):
            arm = part - j - 1
            leg = conj[j] - i - 1
            out -= math.log(2 * arm + leg + 2)
    return out


def log_leading_coefficients(parts: np.ndarray) -> np.ndarray:
    """Vectorized ``log_leading_coefficient`` over a padded partition array."""
    parts = np.asarray(parts, dtype=np.int64)
    n, p = parts.shape
    k = parts.sum(axis=1)
    out = k * math.log(2.0) + gammaln(k + 1.0)
    width = int(parts.max()) if parts.size else 0
    if width == 0:
        return out
    j = np.arange(width)
    conj = (parts[:, :, None] > j).sum(axis=1)  # (n, width)
    for i in range(p):
        row = parts[:, i : i + 1]
        inside = j < row
        hooks = 2 * (row - j - 1) + (conj - i - 1) + 2
        out -= np.sum(np.where(inside, np.log(np.where(inside, hooks, 1)), 0.0), axis=1)
    return out


def build_zonal_table(k: int, max_length: int | None = None, exact: bool = False) -> ZonalTable:
    """Coefficient table of all ``C_kappa`` with ``|kappa| = k``.

    ``max_length`` restricts to partitions with at most that many parts
    (default: no restriction).  ``exact=True`` runs the recurrence in
    rational arithmetic and converts at the end; it is meant for
    validating the floating tables at low degree.
    """
    if k < 0:
        raise ValueError("degree must be non-negative")
    if k > MAX_DEGREE:
        raise ZonalDegreeError(f"degree {k} exceeds the maximum {MAX_DEGREE}")
    p = max(1, k) if max_length is None else max(1, min(max_length, max(k, 1)))
    partitions = tuple(enumerate_partitions(k, p))
    indptr, mu, w, rho = raising_graph(k, p)
    if exact:
        monic = _fill_exact(indptr, mu, w, rho)
        lead = [_exact_leading_coefficient(kap) for kap in partitions]
        coeffs = np.array(
            [[float(lead[r] * monic[c][r]) for c in range(len(partitions))] for r in range(len(partitions))]
        )
    else:
        monic_t = kernels.fill_coefficients(indptr, mu, w, rho)
        lead = np.exp(log_leading_coefficients(partition_array(k, p)))
        coeffs = monic_t.T * lead[:, None]
    return ZonalTable(k, p, partitions, np.ascontiguousarray(coeffs))


def _fill_exact(indptr, mu, w, rho):
    n = len(rho)
    rho = [Fraction(int(r)) for r in rho]
    out = [[Fraction(0)] * n for _ in range(n)]
    for j in range(n):
        out[j][j] = Fraction(1)
        for kap in range(j):
            acc = Fraction(0)
            for e in range(indptr[j], indptr[j + 1]):
                acc += int(w[e]) * out[mu[e]][kap]
            if acc:
                out[j][kap] = acc / (rho[kap] - rho[j])
    return out


def _exact_leading_coefficient(kappa) -> Fraction:
    kappa = tuple(kappa)
    k = sum(kappa)
    conj = [sum(1 for part in kappa if part > j) for j in range(kappa[0])] if kappa else []
    den = 1
    for i, part in enumerate(kappa):
        for j in range(part):
            den *= 2 * (part - j - 1) + (conj[j] - i - 1) + 2
    return Fraction(2**k * math.factorial(k), den)


# ---------------------------------------------------------------------------
# disk cache


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or DEFAULT_CACHE_DIR)


def _cache_path(directory: Path, k: int, p: int) -> Path:
    return Path(directory) / f"zonal-d{k:03d}-l{p:03d}.bin"


def save_table(table: ZonalTable, directory) -> Path:
    """Write ``table`` as a sparse binary file, atomically."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    coeffs = table.coefficients
    rows, cols = np.nonzero(coeffs)
    indptr = np.zeros(len(table.partitions) + 1, dtype=np.uint32)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr).astype(np.uint32)
    payload = b"".join(
        [
            indptr.tobytes(),
            cols.astype(np.uint32).tobytes(),
            coeffs[rows, cols].astype("<f8").tobytes(),
        ]
    )
    header = _HEADER.pack(
        _MAGIC, _FORMAT_VERSION, table.degree, table.max_length, len(table.partitions),
        len(rows), zlib.crc32(payload),
    )
    path = _cache_path(directory, table.degree, table.max_length)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class CacheCorruption(Exception):
    pass


def load_table(directory, k: int, p: int) -> ZonalTable | None:
    """Read a cached table; ``None`` if absent, ``CacheCorruption`` if unreadable."""
    path = _cache_path(Path(directory), k, p)
    if not path.exists():
        return None
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise CacheCorruption(f"{path}: truncated header")
    magic, version, degree, max_length, count, nnz, crc = _HEADER.unpack_from(data)
    payload = data[_HEADER.size:]
    if magic != _MAGIC or version != _FORMAT_VERSION or (degree, max_length) != (k, p):
        raise CacheCorruption(f"{path}: bad header")
    if len(payload) != 4 * (count + 1) + 12 * nnz or zlib.crc32(payload) != crc:
        raise CacheCorruption(f"{path}: checksum mismatch")
    partitions = tuple(enumerate_partitions(k, p))
    if len(partitions) != count:
        raise CacheCorruption(f"{path}: partition count mismatch")
    indptr = np.frombuffer(payload, dtype=np.uint32, count=count + 1)
    cols = np.frombuffer(payload, dtype=np.uint32, count=nnz, offset=4 * (count + 1))
    vals = np.frombuffer(payload, dtype="<f8", count=nnz, offset=4 * (count + 1) + 4 * nnz)
    coeffs = np.zeros((count, count))
    rows = np.repeat(np.arange(count), np.diff(indptr.astype(np.int64)))
    coeffs[rows, cols] = vals
    return ZonalTable(k, p, partitions, coeffs)


def export_table(table: ZonalTable) -> str:
    """Plain-text (JSON) dump of a table for debugging."""
    doc = {
        "degree": table.degree,
        "max_length": table.max_length,
        "rows": [
            {"kappa": list(kap), "coefficients": [[list(lam), c] for lam, c in table.row(kap).items()]}
            for kap in table.partitions
        ],
    }
    return json.dumps(doc, indent=1)


class ZonalStore:
    """Table provider with an optional disk cache.

    Tables are held in memory up to ``memory_bytes``; once the budget is
    spent, further tables are built (or loaded) on every request.
    ``directory=None`` disables the disk cache.  Tables are written to
    disk only when building them took at least ``min_build_seconds``
    (short-length tables rebuild faster than they load).  A corrupted
    cache file is logged, rebuilt and overwritten.
    """

    def __init__(self, directory=None, memory_bytes: int = 256 << 20, min_build_seconds: float = 1.0):
        self.directory = None if directory is None else Path(directory)
        self.memory_bytes = memory_bytes
        self.min_build_seconds = min_build_seconds
        self._memory: dict = {}
        self._resident = 0
        self.rebuilt: list = []

    def table(self, k: int, max_length: int | None = None) -> ZonalTable:
        p = max(1, k) if max_length is None else max(1, min(max_length, max(k, 1)))
        key = (k, p)
        if key in self._memory:
            return self._memory[key]
        table = None
        if self.directory is not None:
            try:
                table = load_table(self.directory, k, p)
            except CacheCorruption as exc:
                log.warning("rebuilding zonal table: %s", exc)
                self.rebuilt.append(key)
        if table is None:
            start = time.perf_counter()
            table = build_zonal_table(k, p)
            slow = time.perf_counter() - start >= self.min_build_seconds
            if self.directory is not None and (slow or key in self.rebuilt):
                save_table(table, self.directory)
        # admit until the budget is spent, never evict: series sweep the
        # degrees in order, which defeats LRU
        size = table.coefficients.nbytes
        if self._resident + size <= self.memory_bytes:
            self._memory[key] = table
            self._resident += size
        return table


_default_store: ZonalStore | None = None


def get_store() -> ZonalStore:
    global _default_store
    if _default_store is None:
        _default_store = ZonalStore(default_cache_dir())
    return _default_store


def set_store(store: ZonalStore | None):
    global _default_store
    _default_store = store
    _values_cache.clear()


# ---------------------------------------------------------------------------
# evaluation


def monomial_values(parts: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Monomial symmetric functions ``m_lam(y)`` for each row of ``parts``.

    ``y`` may be a single eigenvalue vector or a batch ``(..., m)``; the
    result has shape ``(..., len(parts))``.  Partitions longer than ``m``
    give 0.
    """
    y = np.asarray(y, dtype=float)
    parts = np.asarray(parts, dtype=np.int64)
    m = y.shape[-1]
    n, p = parts.shape
    if p > m:
        too_long = parts[:, m:].any(axis=1)
        parts = parts[:, :m]
    else:
        too_long = np.zeros(n, dtype=bool)
        parts = np.concatenate([parts, np.zeros((n, m - p), dtype=np.int64)], axis=1)
    if m <= 6:
        out = _monomial_by_permutations(parts, y)
    else:
        out = _monomial_by_recursion(parts, y)
    out[..., too_long] = 0.0
    return out


def _monomial_by_permutations(parts, y):
    n, m = parts.shape
    mult = np.ones(n)
    for row, vals in enumerate(parts.tolist()):
        for count in _multiplicities(vals):
            mult[row] *= math.factorial(count)
    total = np.zeros(y.shape[:-1] + (n,))
    for perm in itertools.permutations(range(m)):
        pp = parts[:, perm]  # exponent of y_i is pp[:, i]
        term = np.ones(y.shape[:-1] + (n,))
        for i in range(m):
            term = term * np.power(y[..., i : i + 1], pp[:, i])
        total += term
    return total / mult


def _multiplicities(vals):
    counts = {}
    for v in vals:
        counts[v] = counts.get(v, 0) + 1
    return counts.values()


def _monomial_by_recursion(parts, y):
    out = np.zeros(y.shape[:-1] + (parts.shape[0],))
    m = y.shape[-1]
    for row, vals in enumerate(parts.tolist()):
        memo = {}

        def rec(rest, r):
            # m_rest(y_0 .. y_{r-1}); rest is a sorted tuple of positive parts
            if len(rest) > r:
                return 0.0
            if not rest:
                return 1.0
            key = (rest, r)
            if key in memo:
                return memo[key]
            total = rec(rest, r - 1) if len(rest) < r else 0.0
            for v in sorted(set(rest)):
                lst = list(rest)
                lst.remove(v)
                total = total + np.power(y[..., r - 1], v) * rec(tuple(lst), r - 1)
            memo[key] = total
            return total

        out[..., row] = rec(tuple(v for v in vals if v), m)
    return out


def zonal_degree_values(k: int, eigenvalues, store: ZonalStore | None = None):
    """``C_kappa`` for every ``kappa`` of weight ``k`` at the given eigenvalues.

    Returns ``(partitions, scaled_values, log_scale)`` with
    ``C_kappa = scaled_values * exp(log_scale)``; the scale keeps degree-150
    values inside double range.  Partitions are limited to length ``<= m``
    (longer ones vanish).  Batched eigenvalues ``(..., m)`` are supported;
    the scale is then per batch element.
    """
    y = np.asarray(eigenvalues, dtype=float)
    m = y.shape[-1]
    store = store or get_store()
    table = store.table(k, m)
    scale = np.max(np.abs(y), axis=-1)
    scale = np.where(scale > 0, scale, 1.0)
    mono = monomial_values(partition_array(k, table.max_length), y / scale[..., None])
    vals = mono @ table.coefficients.T
    return table.partitions, vals, k * np.log(scale)


_values_cache: dict = {}


def zonal_values_cached(k: int, eigenvalues: tuple, store: ZonalStore | None = None):
    """Memoized ``zonal_degree_values`` for a single eigenvalue tuple.

    Entries are keyed by the eigenvalues divided by their largest magnitude,
    so ``x * Y`` for any ``x > 0`` reuses the values computed for ``Y``.
    """
    y = np.asarray(eigenvalues, dtype=float)
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    if scale == 0.0:
        return zonal_degree_values(k, y, store)
    key = (k, tuple((y / scale).tolist()), id(store or get_store()))
    hit = _values_cache.get(key)
    if hit is None:
        if len(_values_cache) > 4096:
            _values_cache.clear()
        hit = zonal_degree_values(k, y / scale, store)
        _values_cache[key] = hit
    parts, vals, logscale = hit
    return parts, vals, logscale + k * math.log(scale)


def zonal_eval(kappa, eigenvalues, store: ZonalStore | None = None):
    """``C_kappa(X)`` for ``X`` with the given eigenvalues (batch-aware)."""
    kappa = Partition(kappa)
    y = np.asarray(eigenvalues, dtype=float)
    if y.ndim == 0:
        y = y[None]
    m = y.shape[-1]
    if kappa.length > m:
        return np.zeros(y.shape[:-1]) if y.ndim > 1 else 0.0
    parts, vals, logscale = zonal_degree_values(kappa.weight, y, store)
    i = _index_map(kappa.weight, max(1, min(m, max(kappa.weight, 1))))[kappa]
    out = vals[..., i] * np.exp(logscale)
    return float(out) if np.ndim(out) == 0 else out


def log_zonal_identity_value(kappa, m: int) -> float:
    """log of ``C_kappa(I_m)``; ``-inf`` when ``kappa`` has more than ``m`` parts."""
    kappa = Partition(kappa)
    if m < 1:
        raise ValueError("m must be at least 1")
    if kappa.length > m:
        return -math.inf
    p = kappa.length
    k = kappa.weight
    out = 2 * k * math.log(2.0) + math.lgamma(k + 1)
    s, lv = log_rising_factorial(m / 2.0 - 0.5 * np.arange(p), np.asarray(kappa, dtype=float))
    out += float(np.sum(lv))
    for i in range(p):
        for j in range(i + 1, p):
            out += math.log(2 * kappa[i] - 2 * kappa[j] - i + j)
        out -= math.lgamma(2 * kappa[i] + p - i - 1 + 1)
    return out


def zonal_identity_value(kappa, m: int) -> float:
    """``C_kappa(I_m)`` from the closed-form product formula."""
    lv = log_zonal_identity_value(kappa, m)
    return 0.0 if lv == -math.inf else math.exp(lv)


def log_zonal_identity_rows(parts: np.ndarray, m: int) -> np.ndarray:
    """``log C_kappa(I_m)`` for each row of a padded partition array."""
    parts = np.asarray(parts, dtype=np.int64)
    n, p = parts.shape
    k = parts.sum(axis=1)
    length = np.count_nonzero(parts, axis=1)
    out = 2 * k * math.log(2.0) + gammaln(k + 1.0)
    s, lv = log_rising_factorial(m / 2.0 - 0.5 * np.arange(p)[None, :], parts)
    out = out + np.sum(np.where(s == 0, 0.0, lv), axis=1)
    out[np.any(s == 0, axis=1)] = -np.inf
    for i in range(p):
        inside = i < length
        out -= np.where(inside, gammaln(np.maximum(2 * parts[:, i] + length - i, 1)), 0.0)
        for j in range(i + 1, p):
            both = j < length
            gap = 2 * parts[:, i] - 2 * parts[:, j] + (j - i)
            out += np.where(both, np.log(np.where(both, gap, 1)), 0.0)
    out[length > m] = -np.inf
    return out
