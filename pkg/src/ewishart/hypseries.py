"""Truncated hypergeometric-type series of matrix argument.

The generalized series with generator ``h`` is

    rPs(h: alpha; beta; X) = sum_k h^(k)(c)/k! sum_kappa prod(alpha)_kappa / prod(beta)_kappa C_kappa(X)

and its two-argument (heterogeneous) version replaces ``C_kappa(X)`` by
``C_kappa(X) C_kappa(Y) / C_kappa(I_m)`` with ``kappa`` limited to ``n``
parts.  With ``h = exp`` these are the classical ``rFs``.

Each degree is reduced to one ``(sign, log)`` number (partitions summed in
table order with ``math.fsum``), then degrees are accumulated in
increasing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from . import zonal
from .generators import BoundUnavailable, GeneratorModel, derivative_bound, derivative_sequence, shift_allowed
from .numerics import signed_exp, signed_log_sum, to_signed_log
from .partitions import enumerate_partitions, log_pochhammer_rows, partition_array

DEFAULT_MAX_DEGREE = 150
DEFAULT_REL_TOL = 1e-12
CONVERGENCE_RUN = 3
LOG_EPS = math.log(np.finfo(float).eps)


class PoleError(ArithmeticError):
    """A lower parameter makes ``(beta)_kappa`` vanish under a nonzero numerator."""


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesSpec:
    upper: tuple = ()
    lower: tuple = ()
    model: GeneratorModel = field(default_factory=GeneratorModel.exponential)
    shift: float = 0.0
    max_degree: int = DEFAULT_MAX_DEGREE
    rel_tol: float = DEFAULT_REL_TOL
    kummer: bool | None = None  # None: reroute automatically when it helps

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(a) for a in self.upper))
        object.__setattr__(self, "lower", tuple(float(b) for b in self.lower))
        if not shift_allowed(self.model, self.shift):
            raise ValueError(f"shift {self.shift:g} is outside the generator domain")
        if self.max_degree < 0:
            raise ValueError("max_degree must be non-negative")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class TruncationReport:
    sign: float
    log_value: float
    degrees_used: int
    last_degree_term: float
    converged: bool
    tail_bound: float | None = None
    kummer: bool = False
    terms: np.ndarray | None = field(default=None, repr=False)

    @property
    def value(self) -> float:
        return signed_exp(self.sign, self.log_value)


def _pad(eigs, dim):
    eigs = np.atleast_1d(np.asarray(eigs, dtype=float))
    if dim is None:
        return eigs
    if eigs.size > dim:
        raise ValueError(f"{eigs.size} eigenvalues for a {dim}x{dim} argument")
    return np.concatenate([eigs, np.zeros(dim - eigs.size)])


def _orientation(eigs):
    """+1 / -1 when all eigenvalues are >= 0 / <= 0, else 0 (mixed)."""
    if np.all(eigs >= 0):
        return 1
    if np.all(eigs <= 0):
        return -1
    return 0


class DegreeSums:
    """Lazily computed per-degree inner sums of a series.

    ``D_k = sum_kappa prod(alpha)_kappa / prod(beta)_kappa * W_kappa`` with
    ``W_kappa = C_kappa(X)`` or, for a heterogeneous series,
    ``C_kappa(X) C_kappa(Y) / C_kappa(I_m)``.  The sums do not depend on
    the generator, so one instance serves every model and shift.
    """

    def __init__(self, upper, lower, x_eigs, y_eigs=None, dim_m=None, store=None):
        self.upper = tuple(upper)
        self.lower = tuple(lower)
        x = _pad(x_eigs, dim_m)
        self.m = x.size
        self.store = store
        self.orient_x = _orientation(x)
        # evaluate on non-negative eigenvalues when possible; C_kappa(-X) = (-1)^k C_kappa(X)
        self.x = -x if self.orient_x == -1 else x
        self.y = None
        self.orient_y = 1
        if y_eigs is not None:
            y = np.atleast_1d(np.asarray(y_eigs, dtype=float))
            if y.size > self.m:
                raise ValueError("heterogeneous series needs n <= m")
            self.orient_y = _orientation(y)
            self.y = -y if self.orient_y == -1 else y
        self.max_length = self.m if self.y is None else self.y.size
        self.signs: list = []
        self.logs: list = []

    def extend(self, kmax):
        while len(self.signs) <= kmax:
            s, lv = self._degree(len(self.signs))
            self.signs.append(s)
            self.logs.append(lv)
        return np.array(self.signs[: kmax + 1]), np.array(self.logs[: kmax + 1])

    def _zonal(self, k, eigs):
        if not np.any(eigs):
            # zero matrix: only the empty partition survives
            n_parts = len(enumerate_partitions(k, max(1, min(self.max_length, max(k, 1)))))
            vals = np.zeros(n_parts)
            if k == 0:
                vals[0] = 1.0
            return to_signed_log(vals)
        _, vals, logscale = zonal.zonal_values_cached(k, tuple(eigs), self.store)
        p = max(1, min(self.max_length, max(k, 1)))
        vals = vals[zonal.subtable_index(k, p, max(1, min(eigs.size, max(k, 1))))]
        s, lv = to_signed_log(vals)
        return s, lv + logscale

    def _degree(self, k):
        p = max(1, min(self.max_length, max(k, 1)))
        parts = partition_array(k, p)
        sign = np.ones(parts.shape[0])
        logs = np.zeros(parts.shape[0])
        for a in self.upper:
            s, lv = log_pochhammer_rows(a, parts)
            sign, logs = sign * s, logs + np.where(s == 0, 0.0, lv)
        num_zero = sign == 0
        for b in self.lower:
            s, lv = log_pochhammer_rows(b, parts)
            pole = (s == 0) & ~num_zero
            if np.any(pole):
                raise PoleError(f"lower parameter {b:g} vanishes on a partition of weight {k}")
            sign, logs = sign * np.where(s == 0, 1.0, s), logs - np.where(s == 0, 0.0, lv)
        zs, zl = self._zonal(k, self.x)
        sign, logs = sign * zs, logs + zl
        if self.orient_x == -1 and k % 2:
            sign = -sign
        if self.y is not None:
            ys, yl = self._zonal(k, self.y)
            ident = zonal.log_zonal_identity_rows(parts, self.m)
            sign, logs = sign * ys, logs + yl - ident
            if self.orient_y == -1 and k % 2:
                sign = -sign
        return signed_log_sum(sign, logs)


def _sign_changes(signs):
    s = signs[signs != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def kummer_transform(spec: SeriesSpec, eigenvalues_x):
    """``1P1(h(c): a; b; X) = 1P1(h(c + tr X): b - a; b; -X)``.

    Returns the transformed spec and eigenvalues.
    """
    if len(spec.upper) != 1 or len(spec.lower) != 1:
        raise ArityError("the Kummer relation applies to 1P1 series only")
    x = np.atleast_1d(np.asarray(eigenvalues_x, dtype=float))
    (a,), (b,) = spec.upper, spec.lower
    new_shift = spec.shift + float(np.sum(x))
    if not shift_allowed(spec.model, new_shift):
        raise ValueError(f"Kummer transform needs shift {new_shift:g}, outside the generator domain")
    return replace(spec, upper=(b - a,), lower=(b,), shift=new_shift, kummer=False), -x


def _wants_kummer(spec, x):
    if spec.kummer is not None:
        return spec.kummer
    if len(spec.upper) != 1 or len(spec.lower) != 1:
        return False
    orient = _orientation(x)
    tr = float(np.sum(x))
    if orient == 0 or tr == 0.0 or not shift_allowed(spec.model, spec.shift + tr):
        return False
    probe = min(spec.max_degree, 12)
    k = np.arange(probe + 1)
    s0, _ = derivative_sequence(spec.model, probe, spec.shift)
    s1, _ = derivative_sequence(spec.model, probe, spec.shift + tr)
    before = s0 * float(orient) ** k
    after = s1 * float(-orient) ** k
    return _sign_changes(after) < _sign_changes(before)


def sum_degrees(term, max_degree: int, rel_tol: float) -> TruncationReport:
    """Accumulate ``term(k) -> (sign, log)`` for ``k = 0, 1, ...``.

    Stops after ``CONVERGENCE_RUN`` consecutive degrees whose magnitude is
    below ``rel_tol`` times the partial sum, or at ``max_degree``.
    """
    signs, logs = [], []
    quiet = 0
    used = max_degree
    converged = False
    partial = (0.0, -math.inf)
    log_tol = math.log(rel_tol)
    for k in range(max_degree + 1):
        s, lv = term(k)
        if s == 0:
            lv = -math.inf
        signs.append(s)
        logs.append(lv)
        partial = signed_log_sum(signs, logs)
        small = s == 0 or (partial[0] != 0 and lv <= log_tol + partial[1])
        quiet = quiet + 1 if small and k > 0 else 0
        if quiet >= CONVERGENCE_RUN:
            used, converged = k, True
            break
    terms = np.array([signed_exp(s, lv) if lv < 709 else s * math.inf for s, lv in zip(signs, logs)])
    last = abs(float(terms[-1]))
    return TruncationReport(partial[0], partial[1], used, last, converged, terms=terms)


def _accumulate(spec, sums: DegreeSums):
    hs, hl = derivative_sequence(spec.model, spec.max_degree, spec.shift)

    def term(k):
        ds, dl = sums.extend(k)
        return hs[k] * ds[k], hl[k] - math.lgamma(k + 1) + dl[k]

    return sum_degrees(term, spec.max_degree, spec.rel_tol)


def rPs(spec: SeriesSpec, eigenvalues_x, dim_m: int | None = None, store=None, with_tail: bool = True):
    """Evaluate ``rPs(h^(k)(shift): alpha; beta; X)``.

    Returns ``(value, report)``.  Non-convergence within ``max_degree`` is
    reported via ``report.converged``, not raised.
    """
    x = _pad(eigenvalues_x, dim_m)
    if _wants_kummer(spec, x):
        tspec, tx = kummer_transform(spec, x)
        value, report = rPs(tspec, tx, store=store, with_tail=with_tail)
        report.kummer = True
        return value, report
    sums = DegreeSums(spec.upper, spec.lower, x, store=store)
    report = _accumulate(spec, sums)
    if with_tail:
        report.tail_bound = tail_bound(spec, x, report.degrees_used + 1)
    return report.value, report


def rPs_heterogeneous(spec: SeriesSpec, eigenvalues_x, dim_m, eigenvalues_y, dim_n, store=None, with_tail=True):
    """Evaluate the two-argument series ``rPs^(m,n)(h: alpha; beta; X, Y)``."""
    if dim_n > dim_m:
        raise ValueError(f"heterogeneous series needs n <= m (got n={dim_n}, m={dim_m})")
    x = _pad(eigenvalues_x, dim_m)
    y = _pad(eigenvalues_y, dim_n)
    sums = DegreeSums(spec.upper, spec.lower, x, y_eigs=y, store=store)
    report = _accumulate(spec, sums)
    if with_tail:
        bound = float(np.max(np.abs(x))) * float(np.max(np.abs(y)))
        report.tail_bound = tail_bound(spec, np.full(dim_n, bound), report.degrees_used + 1)
    return report.value, report


def rFs(upper, lower, eigenvalues_x, dim_m=None, max_degree=DEFAULT_MAX_DEGREE, rel_tol=DEFAULT_REL_TOL,
        store=None, kummer=None):
    """Classical ``rFs(alpha; beta; X)`` (generator ``exp``)."""
    spec = SeriesSpec(upper, lower, GeneratorModel.exponential(), 0.0, max_degree, rel_tol, kummer=kummer)
    return rPs(spec, eigenvalues_x, dim_m, store=store, with_tail=False)


def _ratios_at_most_one(spec) -> bool:
    """``0 < a_i <= b_i`` pairwise (sorted), so each Pochhammer ratio is <= 1."""
    if len(spec.upper) != len(spec.lower):
        return False
    return all(0 < a <= b for a, b in zip(sorted(spec.upper), sorted(spec.lower)))


def tail_bound(spec: SeriesSpec, eigenvalues_x, from_degree: int, extra: int = 200):
    """Upper bound on ``|sum_{k >= from_degree} term_k|``.

    Terms are dominated by ``B_k/k! * sum_kappa |ratio_kappa| C_kappa(x_max I)``
    with ``x_max`` the largest absolute eigenvalue (``C_kappa`` has
    non-negative coefficients).  ``B_k`` is the model constant ``M`` while the
    derivative sequence respects it, otherwise ``|h^(k)(shift)|``.  Returns
    ``None`` when the model has no certified ``M``, and ``inf`` when the
    dominating terms have not died out within ``extra`` further degrees.
    """
    try:
        bound = derivative_bound(spec.model)
    except BoundUnavailable:
        return None
    x = np.atleast_1d(np.asarray(eigenvalues_x, dtype=float))
    m = x.size
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    if xmax == 0.0:
        return 0.0
    kend = from_degree + extra
    hs, hl = derivative_sequence(spec.model, kend, spec.shift)
    log_m = math.log(bound)
    blog = np.maximum(hl, log_m) if spec.shift == 0 else hl
    if _ratios_at_most_one(spec) and _orientation(x) != 0:
        # every (a)_kappa/(b)_kappa <= 1, and sum_kappa C_kappa(|X|) = (tr |X|)^k
        k = np.arange(from_degree, kend + 1)
        logs = blog[from_degree:] - gammaln(k + 1.0) + k * math.log(float(np.sum(np.abs(x))))
        trace_bound = _finish(logs)
        return min(trace_bound, _relaxed_bound(spec, m, xmax, blog, from_degree, kend))
    return _relaxed_bound(spec, m, xmax, blog, from_degree, kend)


@lru_cache(maxsize=4096)
def _identity_degree_log(upper: tuple, lower: tuple, m: int, k: int) -> float:
    """log of ``sum_kappa |prod (a)_kappa / prod (b)_kappa| C_kappa(I_m)`` over ``|kappa| = k``."""
    parts = partition_array(k, max(1, min(m, k)))
    logs = np.zeros(parts.shape[0])
    alive = np.ones(parts.shape[0], dtype=bool)
    for a in upper:
        s, lv = log_pochhammer_rows(a, parts)
        alive &= s != 0
        logs += np.where(s == 0, 0.0, lv)
    for b in lower:
        s, lv = log_pochhammer_rows(b, parts)
        logs -= np.where(s == 0, 0.0, lv)
    logs += zonal.log_zonal_identity_rows(parts, m)
    return signed_log_sum(alive.astype(float), logs)[1]


def _relaxed_bound(spec, m, xmax, blog, from_degree, kend):
    total = []
    for k in range(from_degree, kend + 1):
        deg_log = _identity_degree_log(spec.upper, spec.lower, m, k) + k * math.log(xmax)
        total.append(blog[k] - math.lgamma(k + 1) + deg_log)
        _, acc = signed_log_sum(np.ones(len(total)), total)
        if total[-1] < acc + LOG_EPS:
            break
    return _finish(total)


def _finish(logs):
    """Sum of the window plus a geometric remainder.

    When the window ends with term ratios below one that are no longer
    increasing, the rest is dominated by ``t * r / (1 - r)``.  Otherwise
    nothing is certified and ``inf`` is returned.
    """
    logs = np.asarray(logs, dtype=float)
    _, acc = signed_log_sum(np.ones(logs.size), logs)
    if logs[-1] >= acc + LOG_EPS:
        if logs.size < 4:
            return math.inf
        ratios = np.diff(logs[-4:])
        if not (ratios[-1] < 0 and np.all(np.diff(ratios) <= 1e-12)):
            return math.inf
        r = math.exp(ratios[-1])
        _, acc = signed_log_sum([1.0, 1.0], [acc, logs[-1] + math.log(r / (1 - r))])
    return math.exp(acc) if acc < 709 else math.inf
