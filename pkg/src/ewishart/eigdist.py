"""Eigenvalue distributions of elliptical Wishart matrices.

``W = X X^T`` with ``X`` (m x n) matrix-variate elliptical with scale ``Sigma``
and generator ``h``.  With ``t = min(m, n)`` and ``Y = Sigma^{-1}``,

    P(l1 < x) = pi^(mn/2) G_t((t+1)/2) / G_t((n+m+1)/2) |xY|^(n/2)
                * 1P1(h^(k)(0): n/2; (n+m+1)/2; xY)
              = same prefactor
                * 1P1(h^(k)(x tr Y): (m+1)/2; (n+m+1)/2; -xY)      (Kummer form)

The inner sums ``sum_kappa ratio_kappa C_kappa(Y)`` do not depend on ``x``
(``C_kappa(xY) = x^k C_kappa(Y)``), so they are computed once per
distribution and every CDF evaluation is a cheap one-dimensional sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import gammaln

from . import zonal
from .generators import GeneratorModel, ModelError, derivative_sequence
from .hypseries import (
    CONVERGENCE_RUN,
    DegreeSums,
    SeriesSpec,
    TruncationReport,
    rPs_heterogeneous,
    tail_bound,
)
from .linalg import SpdMatrix
from .numerics import signed_log_sum
from .partitions import multivariate_log_gamma

LOG_PI = math.log(math.pi)
FORMS = ("kummer", "series", "heterogeneous")
QUANTILE_CAP = 1e6
# degree sums are precomputed, so summing to full double precision is cheap
CDF_REL_TOL = 1e-16


class NonMonotoneError(ArithmeticError):
    """The truncated CDF decreases inside the search bracket; raise K."""


class BracketError(ArithmeticError):
    pass


@dataclass(frozen=True)
class WishartSpec:
    """Shape, scale and generator of an elliptical Wishart matrix."""

    m: int
    n: int
    sigma: SpdMatrix
    model: GeneratorModel

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ModelError("m and n must be positive")
        if not isinstance(self.sigma, SpdMatrix):
            object.__setattr__(self, "sigma", SpdMatrix(self.sigma))
        if self.sigma.order != self.m:
            raise ModelError(f"sigma is {self.sigma.order}x{self.sigma.order}, expected {self.m}x{self.m}")
        if (self.model.m, self.model.n) != (self.m, self.n):
            raise ModelError(f"model dims {(self.model.m, self.model.n)} differ from (m, n) = {(self.m, self.n)}")

    @classmethod
    def build(cls, m, n, sigma, model):
        """Convenience constructor; ``sigma`` may be a diagonal list and
        ``model`` a string such as ``"t:rho=7"``."""
        from .generators import parse_model

        if isinstance(model, str):
            model = parse_model(model, m, n)
        elif (model.m, model.n) != (m, n):
            model = model.with_dims(m, n)
        if not isinstance(sigma, SpdMatrix):
            sigma = SpdMatrix(sigma)
        return cls(m, n, sigma, model)

    @property
    def singular(self) -> bool:
        return self.n < self.m

    @property
    def t(self) -> int:
        return min(self.m, self.n)

    @cached_property
    def inverse_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``Sigma^{-1}``, descending (one Jacobi solve)."""
        return np.sort(1.0 / self.sigma.eigenvalues())[::-1]

    def with_model(self, model) -> "WishartSpec":
        return WishartSpec.build(self.m, self.n, self.sigma, model)


def eigenvalue_vector(values, allow_ties: bool = False) -> np.ndarray:
    """Validate ``l1 > l2 > ... > 0`` (``>=`` with ``allow_ties``)."""
    ell = np.atleast_1d(np.asarray(values, dtype=float))
    if ell.ndim != 1 or ell.size == 0:
        raise ValueError("expected a non-empty vector of eigenvalues")
    if np.any(ell <= 0):
        raise ValueError("eigenvalues must be positive")
    gaps = np.diff(ell)
    if np.any(gaps > 0) or (not allow_ties and np.any(gaps == 0)):
        raise ValueError("eigenvalues must be in decreasing order")
    return ell


def _log_prefactor(spec: WishartSpec, t: int) -> float:
    """log of pi^(mn/2) G_t((t+1)/2) / G_t((n+m+1)/2) |Sigma^{-1}|^(n/2)."""
    m, n = spec.m, spec.n
    return (
        0.5 * m * n * LOG_PI
        + multivariate_log_gamma(t, 0.5 * (t + 1))
        - multivariate_log_gamma(t, 0.5 * (n + m + 1))
        - 0.5 * n * spec.sigma.log_det()
    )


def _truncate(signs, logs, rel_tol):
    """Sum a term sequence, stopping early once it has converged."""
    signs = np.asarray(signs, dtype=float)
    logs = np.where(signs == 0, -np.inf, np.asarray(logs, dtype=float))
    kmax = signs.size - 1
    used, converged = kmax, False
    live = np.isfinite(logs)
    if live.any():
        top = logs[live].max()
        scaled = np.where(live, signs * np.exp(logs - top), 0.0)
        partial = np.abs(np.cumsum(scaled))
        small = np.abs(scaled) <= rel_tol * partial
        small[0] = False
        run = 0
        for k in range(1, kmax + 1):
            run = run + 1 if small[k] else 0
            if run >= CONVERGENCE_RUN:
                used, converged = k, True
                break
    s, lv = signed_log_sum(signs[: used + 1], logs[: used + 1])
    terms = np.where(np.isfinite(logs), signs * np.exp(np.minimum(logs, 709.0)), 0.0)
    return TruncationReport(s, lv, used, float(abs(terms[used])), converged, terms=terms[: used + 1])


class LargestEigenvalueCdf:
    """Truncated CDF of the largest eigenvalue with precomputed degree sums.

    Parameters
    ----------
    spec : WishartSpec
    K : int
        Truncation degree.
    form : {"kummer", "series", "heterogeneous"}
        ``kummer`` (default) uses the shifted series with all-positive
        terms for completely monotone generators.  ``series`` is the
        unshifted series and ``heterogeneous`` the two-argument series of
        the singular case; both are kept for cross-validation.
    """

    def __init__(self, spec: WishartSpec, K: int, form: str = "kummer", rel_tol: float = CDF_REL_TOL,
                 store=None):
        if form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")
        if K < 0:
            raise ValueError("K must be non-negative")
        if form == "heterogeneous" and not spec.singular:
            raise ValueError("the heterogeneous form needs n < m")
        self.spec = spec
        self.K = int(K)
        self.form = form
        self.rel_tol = rel_tol
        self.store = store
        m, n = spec.m, spec.n
        self.y = spec.inverse_eigenvalues
        self.trace_y = float(np.sum(self.y))
        if form == "kummer":
            self.upper, self.lower = 0.5 * (m + 1), 0.5 * (n + m + 1)
            self._sums = DegreeSums((self.upper,), (self.lower,), self.y, store=store)
        elif form == "series":
            self.upper, self.lower = 0.5 * n, 0.5 * (n + m + 1)
            self._sums = DegreeSums((self.upper,), (self.lower,), self.y, store=store)
        else:
            self.upper, self.lower = 0.5 * m, 0.5 * (n + m + 1)
            self._sums = DegreeSums((self.upper,), (self.lower,), self.y, y_eigs=np.ones(n), store=store)
        self.log_prefactor = _log_prefactor(spec, spec.t)
        self._dsign, self._dlog = self._sums.extend(self.K)
        self._lfact = np.array([math.lgamma(k + 1) for k in range(self.K + 1)])

    def _terms(self, x):
        k = np.arange(self.K + 1)
        if self.form == "kummer":
            hs, hl = derivative_sequence(self.spec.model, self.K, x * self.trace_y)
            alt = np.where(k % 2 == 0, 1.0, -1.0)
            return alt * hs * self._dsign, hl - self._lfact + k * math.log(x) + self._dlog
        hs, hl = derivative_sequence(self.spec.model, self.K, 0.0)
        return hs * self._dsign, hl - self._lfact + k * math.log(x) + self._dlog

    def evaluate(self, x: float, with_tail: bool = False):
        """Return ``(raw_probability, report)``."""
        x = float(x)
        if not x > 0:
            raise ValueError(f"x must be positive, got {x}")
        signs, logs = self._terms(x)
        report = _truncate(signs, logs, self.rel_tol)
        report.kummer = self.form == "kummer"
        mn = self.spec.m * self.spec.n
        scale = self.log_prefactor + 0.5 * mn * math.log(x)
        report.log_value += scale
        report.terms = report.terms * math.exp(scale) if scale < 709 else report.terms
        report.last_degree_term = report.last_degree_term * math.exp(min(scale, 709.0))
        if with_tail:
            report.tail_bound = self.tail(x, report.degrees_used + 1, scale)
        return report.value, report

    def tail(self, x, from_degree, scale=None):
        m, n = self.spec.m, self.spec.n
        if scale is None:
            scale = self.log_prefactor + 0.5 * m * n * math.log(x)
        if self.form == "kummer":
            sspec = SeriesSpec((self.upper,), (self.lower,), self.spec.model, shift=x * self.trace_y)
            bound = tail_bound(sspec, -x * self.y, from_degree)
        elif self.form == "series":
            sspec = SeriesSpec((self.upper,), (self.lower,), self.spec.model)
            bound = tail_bound(sspec, x * self.y, from_degree)
        else:
            sspec = SeriesSpec((self.upper,), (self.lower,), self.spec.model)
            bound = tail_bound(sspec, np.full(n, x * self.y[0]), from_degree)
        if bound is None:
            return None
        return bound * math.exp(scale) if scale < 709 else math.inf

    def __call__(self, x) -> float:
        return self.evaluate(x)[0]

    def _scan(self, a, b, p, points=65):
        grid = np.linspace(a, b, points)
        vals = [self(x) for x in grid]
        for i in range(1, points):
            if vals[i] < vals[i - 1] - 1e-9:
                break
            if vals[i] >= p:
                return grid[i - 1], vals[i - 1], grid[i], vals[i]
        raise NonMonotoneError(
            f"truncated CDF turns down near x={grid[i]:g} before reaching {p}; increase K={self.K}"
        )

    def quantile(self, p: float, tol: float = 1e-6, max_iter: int = 200) -> float:
        """Smallest-effort ``x`` with ``|F(x) - p| <= tol``.

        Brackets by doubling (or halving) from ``x = 1`` and bisects.  A
        decreasing truncated CDF inside the bracket raises
        ``NonMonotoneError``; this means ``K`` is too small there.
        """
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        lo, hi = None, 1.0
        f_hi = self(hi)
        if f_hi < p:
            prev = 0.0
            while f_hi < p:
                prev, (lo, f_lo) = lo, (hi, f_hi)
                hi *= 2.0
                if hi > QUANTILE_CAP:
                    raise BracketError(f"no x <= {QUANTILE_CAP:g} with F(x) >= {p}; truncation K={self.K} too low?")
                f_hi = self(hi)
                if f_hi < f_lo - 1e-9:
                    # a truncated CDF can overshoot and turn down past its
                    # converged region; look for the crossing before the turn
                    lo, f_lo, hi, f_hi = self._scan(prev or 0.5 * lo, hi, p)
                    break
        else:
            lo, f_lo = 0.5, self(0.5)
            while f_lo >= p:
                hi, f_hi = lo, f_lo
                lo *= 0.5
                if lo < 1e-300:
                    raise BracketError(f"no x > 0 with F(x) < {p}")
                f_lo = self(lo)
        for _ in range(max_iter):
            if hi - lo <= 1e-12 * hi:
                break
            mid = 0.5 * (lo + hi)
            f_mid = self(mid)
            # values above f_hi are a post-peak overshoot and leave the first
            # crossing in [lo, mid]; a drop below f_lo means the series is
            # already unreliable below the crossing
            if f_mid < f_lo - 1e-9:
                raise NonMonotoneError(f"truncated CDF is not monotone near x={mid:g}; increase K")
            if f_mid < p:
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid
        x = 0.5 * (lo + hi)
        if abs(self(x) - p) > tol:
            raise BracketError(f"bisection ended at x={x:g} with |F(x) - p| > {tol:g}")
        return x


@lru_cache(maxsize=32)
def _cached_cdf(spec, K, form, rel_tol):
    return LargestEigenvalueCdf(spec, K, form, rel_tol)


def _distribution(spec, K, form, rel_tol, store):
    if store is not None:
        return LargestEigenvalueCdf(spec, K, form, rel_tol, store)
    return _cached_cdf(spec, int(K), form, rel_tol)


def cdf_lmax(spec: WishartSpec, x: float, K: int, form: str = "kummer", rel_tol: float = CDF_REL_TOL,
             with_tail: bool = True, store=None):
    """``P(l1 < x)`` truncated at degree ``K``.

    Returns ``(probability, report)``; the probability is clamped to
    ``[0, 1]`` while ``report.value`` keeps the raw series value.
    """
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    raw, report = _distribution(spec, K, form, rel_tol, store).evaluate(x, with_tail=with_tail)
    return min(1.0, max(0.0, raw)), report


def quantile_lmax(spec: WishartSpec, p: float, K: int, form: str = "kummer", tol: float = 1e-6,
                  rel_tol: float = CDF_REL_TOL, store=None) -> float:
    return _distribution(spec, K, form, rel_tol, store).quantile(p, tol)


def _inner_sums_pm(spec, K, upper, lower, store=None):
    """``sum_{kappa in P_m^k} (upper)_kappa / (lower)_kappa C_kappa(Sigma^{-1})`` for k <= K."""
    return DegreeSums((upper,), (lower,), spec.inverse_eigenvalues, store=store).extend(K)


def cdf_lmax_t_model(spec: WishartSpec, x: float, K: int, rel_tol: float = CDF_REL_TOL, store=None):
    """Explicit truncated CDF ``F_K(x)`` for the matrix-t model (``m > n``).

    ``F_K(x) = G_n((n+1)/2) G((mn+rho)/2) / (G_n((m+n+1)/2) G(rho/2)) |x Sigma^{-1}|^(n/2)
    * sum_k ((mn+rho)/2)_k rho^(rho/2) / (rho + x tr Sigma^{-1})^((mn+rho)/2 + k)
    * sum_{kappa in P_m^k} ((m+1)/2)_kappa / ((m+n+1)/2)_kappa C_kappa(x Sigma^{-1}) / k!``
    """
    model = spec.model
    if model.kind != "t":
        raise ModelError("cdf_lmax_t_model needs the matrix-t model")
    m, n = spec.m, spec.n
    if not m > n:
        raise ModelError("the explicit matrix-t form is stated for m > n")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0, TruncationReport(0.0, -math.inf, 0, 0.0, True)
    rho = model.rho
    a = 0.5 * (m * n + rho)
    y = spec.inverse_eigenvalues
    ds, dl = _cached_pm_sums(spec, K, store)
    k = np.arange(K + 1)
    logs = (
        gammaln(a + k) - math.lgamma(a)
        + 0.5 * rho * math.log(rho) - (a + k) * math.log(rho + x * float(np.sum(y)))
        + k * math.log(x) + dl - gammaln(k + 1)
    )
    report = _truncate(ds, logs, rel_tol)
    report.log_value += (
        multivariate_log_gamma(n, 0.5 * (n + 1)) + math.lgamma(a)
        - multivariate_log_gamma(n, 0.5 * (m + n + 1)) - math.lgamma(0.5 * rho)
        + 0.5 * n * float(np.sum(np.log(x * y)))
    )
    report.kummer = True
    return min(1.0, max(0.0, report.value)), report


def cdf_lmax_kotz(spec: WishartSpec, x: float, K: int, rel_tol: float = CDF_REL_TOL, store=None):
    """Closed-form truncated CDF for Kotz type I with ``theta = 1/2``, ``q = 2`` and ``m > n``.

    ``P(l1 < x) = G_n((n+1)/2) G(mn/2) / (G_n((m+n+1)/2) G(mn/2+1)) (1/2)^(mn/2+1)
    |x Sigma^{-1}|^(n/2) etr(-x Sigma^{-1}/2)
    * sum_k (x/2)^k (x tr Sigma^{-1} - 2k) / k! sum_{kappa in P_m^k} ((m+1)/2)_kappa / ((m+n+1)/2)_kappa C_kappa(Sigma^{-1})``
    """
    model = spec.model
    if model.kind != "kotz1" or model.theta != 0.5 or model.q != 2:
        raise ModelError("the closed Kotz form needs theta = 1/2 and q = 2; use cdf_lmax otherwise")
    m, n = spec.m, spec.n
    if not m > n:
        raise ModelError("the closed Kotz form is stated for m > n")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0, TruncationReport(0.0, -math.inf, 0, 0.0, True)
    y = spec.inverse_eigenvalues
    tr = x * float(np.sum(y))
    ds, dl = _cached_pm_sums(spec, K, store)
    k = np.arange(K + 1)
    factor = tr - 2.0 * k
    with np.errstate(divide="ignore"):
        logs = k * math.log(0.5 * x) + np.log(np.abs(factor)) + dl - np.array([math.lgamma(j + 1) for j in k])
    report = _truncate(ds * np.sign(factor), logs, rel_tol)
    mn = m * n
    report.log_value += (
        multivariate_log_gamma(n, 0.5 * (n + 1)) + math.lgamma(0.5 * mn)
        - multivariate_log_gamma(n, 0.5 * (m + n + 1)) - math.lgamma(0.5 * mn + 1)
        + (0.5 * mn + 1) * math.log(0.5) + 0.5 * n * float(np.sum(np.log(x * y))) - 0.5 * tr
    )
    report.kummer = True
    return min(1.0, max(0.0, report.value)), report


_PM_SUMS: dict = {}


def _cached_pm_sums(spec, K, store):
    m, n = spec.m, spec.n
    key = (spec.sigma, m, n, int(K))
    if store is not None or key not in _PM_SUMS:
        sums = _inner_sums_pm(spec, K, 0.5 * (m + 1), 0.5 * (m + n + 1), store)
        if store is not None:
            return sums
        _PM_SUMS[key] = sums
    return _PM_SUMS[key]


def joint_density(spec: WishartSpec, ell, K: int, shift: bool = True, rel_tol: float = CDF_REL_TOL,
                  store=None):
    """Joint density of the ``n`` nonzero eigenvalues of a singular ``W`` (``n < m``).

    With ``shift`` (default) the series is evaluated at ``Sigma^{-1} - y_min I``
    with the generator derivatives taken at ``y_min tr L1``; both arguments
    then stay non-negative while the alternating part of the sum shrinks.
    Returns ``(density, report)``.
    """
    m, n = spec.m, spec.n
    if not spec.singular:
        raise ModelError("the joint density is implemented for the singular case n < m only")
    ell = eigenvalue_vector(ell, allow_ties=True)
    if ell.size != n:
        raise ValueError(f"expected {n} eigenvalues, got {ell.size}")
    if np.any(np.diff(ell) == 0):
        return 0.0, TruncationReport(0.0, -math.inf, 0, 0.0, True)
    y = spec.inverse_eigenvalues
    c = float(y[-1]) * float(np.sum(ell)) if shift else 0.0
    x_arg = y - y[-1] if shift else y
    sspec = SeriesSpec((), (), spec.model, shift=c, max_degree=K, rel_tol=rel_tol, kummer=False)
    _, report = rPs_heterogeneous(sspec, x_arg, m, ell, n, store=store, with_tail=False)
    diffs = ell[:, None] - ell[None, :]
    log_vdm = float(np.sum(np.log(diffs[np.triu_indices(n, 1)])))
    log_const = (
        0.5 * n * (n + m) * LOG_PI
        - 0.5 * n * spec.sigma.log_det()
        - multivariate_log_gamma(n, 0.5 * n)
        - multivariate_log_gamma(n, 0.5 * m)
        + 0.5 * (m - n - 1) * float(np.sum(np.log(ell)))
        + log_vdm
    )
    report.log_value += log_const
    return report.value, report


def gaussian_reduction_cdf(m, n, sigma, x, K: int = 150, rel_tol: float = CDF_REL_TOL, store=None):
    """Classical Gaussian ``P(l1 < x)`` through the ordinary ``1F1``.

    ``G_t((t+1)/2) (x/2)^(mn/2) / (G_t((n+m+1)/2) |Sigma|^(n/2))
    * 1F1(n/2; (n+m+1)/2; -x Sigma^{-1} / 2)``
    """
    from .hypseries import rFs

    sigma = sigma if isinstance(sigma, SpdMatrix) else SpdMatrix(sigma)
    t = min(m, n)
    y = np.sort(1.0 / sigma.eigenvalues())[::-1]
    value, report = rFs((0.5 * n,), (0.5 * (n + m + 1),), -0.5 * x * y, max_degree=K, rel_tol=rel_tol, store=store)
    log_pref = (
        multivariate_log_gamma(t, 0.5 * (t + 1)) + 0.5 * m * n * math.log(0.5 * x)
        - multivariate_log_gamma(t, 0.5 * (n + m + 1)) - 0.5 * n * sigma.log_det()
    )
    return value * math.exp(log_pref), report
