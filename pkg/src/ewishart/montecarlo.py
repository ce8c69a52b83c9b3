"""Monte Carlo samplers, empirical CDFs of the largest eigenvalue, and oracles.

Random numbers come from numpy's PCG64.  A run of ``N`` replications is cut
into fixed-size chunks; chunk ``i`` draws from the ``i``-th child of
``SeedSequence(seed)``.  The chunking does not depend on the number of
worker threads, so results are identical for any ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from . import zonal
from .eigdist import WishartSpec
from .generators import GeneratorModel
from .linalg import SpdMatrix
from .partitions import Partition, multivariate_log_gamma, pochhammer_partition

CHUNK = 1 << 15


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _lower_factor(sigma):
    return sigma.factor if isinstance(sigma, SpdMatrix) else SpdMatrix(sigma).factor


def sample_matrix_normal(m, n, sigma, rng, size=None):
    """``X = L Z`` with ``Z`` i.i.d. standard normal and ``L L^T = Sigma``.

    Returns an ``(m, n)`` array, or ``(size, m, n)`` when ``size`` is given.
    """
    low = _lower_factor(sigma)
    shape = (m, n) if size is None else (size, m, n)
    return low @ rng.standard_normal(shape)


def sample_matrix_t(m, n, rho, sigma, rng, size=None):
    """Matrix-t as the normal / chi-square mixture ``Z / sqrt(s / rho)``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    z = sample_matrix_normal(m, n, sigma, rng, size)
    s = rng.chisquare(rho, size=None if size is None else (size, 1, 1))
    return z / np.sqrt(s / rho)


def sample_kotz1(m, n, theta, q, sigma, rng, size=None):
    """Kotz type I: ``X = r L U`` with ``U`` uniform on the unit sphere of R^(mn).

    The radial density is proportional to ``r^(mn-1) h(r^2)``, which makes
    ``r^2 ~ Gamma(mn/2 + q - 1, rate theta)``.
    """
    GeneratorModel.kotz1(theta, q, m, n)  # validates the parameters
    low = _lower_factor(sigma)
    count = 1 if size is None else size
    u = rng.standard_normal((count, m * n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r2 = rng.gamma(0.5 * m * n + q - 1, 1.0 / theta, size=count)
    x = low @ (np.sqrt(r2)[:, None] * u).reshape(count, m, n)
    return x[0] if size is None else x


def sample_model(spec: WishartSpec, rng, size):
    """Batch of ``size`` matrices from the elliptical model of ``spec``."""
    model, m, n = spec.model, spec.m, spec.n
    if model.kind == "gaussian":
        return sample_matrix_normal(m, n, spec.sigma, rng, size)
    if model.kind == "t":
        return sample_matrix_t(m, n, model.rho, spec.sigma, rng, size)
    if model.kind == "kotz1":
        return sample_kotz1(m, n, model.theta, model.q, spec.sigma, rng, size)
    raise ValueError(f"no sampler for generator {model.kind!r}")


def largest_eigenvalues(x: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of ``X X^T`` for a batch ``(N, m, n)``.

    Uses the smaller Gram matrix (``X^T X`` when ``n < m``); both share the
    nonzero spectrum.
    """
    xt = np.swapaxes(x, -1, -2)
    gram = xt @ x if x.shape[-1] < x.shape[-2] else x @ xt
    return np.linalg.eigvalsh(gram)[..., -1]


@dataclass
class SimConfig:
    spec: WishartSpec
    replications: int = 10**6
    seed: int = 0
    grid: np.ndarray = field(default_factory=lambda: np.linspace(0.5, 50.0, 100))
    chunk: int = CHUNK

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")


def simulate_lmax(spec: WishartSpec, replications: int, seed: int = 0, workers: int = 1, chunk: int = CHUNK):
    """``replications`` draws of the largest eigenvalue, in chunk order."""
    sizes = [chunk] * (replications // chunk)
    if replications % chunk:
        sizes.append(replications % chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(i):
        rng = make_rng(seeds[i])
        return largest_eigenvalues(sample_model(spec, rng, sizes[i]))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return np.concatenate(parts)


def empirical_cdf(samples, grid):
    """``(p_hat, stderr)`` with ``p_hat[i] = #{samples < grid[i]} / N``."""
    s = np.sort(np.asarray(samples))
    p = np.searchsorted(s, np.asarray(grid), side="left") / s.size
    return p, np.sqrt(p * (1 - p) / s.size)


def empirical_cdf_lmax(config: SimConfig, workers: int = 1):
    """Empirical CDF of the largest eigenvalue on ``config.grid``.

    Returns ``(x, p_hat, stderr)``.
    """
    samples = simulate_lmax(config.spec, config.replications, config.seed, workers, config.chunk)
    p, se = empirical_cdf(samples, config.grid)
    return config.grid.copy(), p, se


def dkw_epsilon(n: int, delta: float = 0.01) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band at confidence ``1 - delta``."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


# -- oracles ----------------------------------------------------------------


class OracleResult(NamedTuple):
    mc: float
    stderr: float
    analytic: float

    @property
    def z(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mc == self.analytic else math.inf
        return abs(self.mc - self.analytic) / self.stderr


def haar_frames(m, n, rng, size):
    """``size`` Haar-distributed ``m x n`` matrices with orthonormal columns.

    QR of a Gaussian matrix with the signs of ``diag(R)`` moved into ``Q``.
    """
    q, r = np.linalg.qr(rng.standard_normal((size, m, n)))
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def _sqrt_spd(a):
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.T


def oracle_splitting_identity(kappa, x, y, replications, rng) -> OracleResult:
    """Monte Carlo check of ``E C_kappa(X H Y H^T) = C_kappa(X) C_kappa(Y) / C_kappa(I_m)``.

    ``H`` is Haar on the Stiefel manifold of ``m x n`` frames.
    """
    kappa = Partition(kappa)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = x.shape[0], y.shape[0]
    if n > m:
        raise ValueError("splitting identity needs n <= m")
    h = haar_frames(m, n, rng, replications)
    ys = _sqrt_spd(y)
    # nonzero eigenvalues of X H Y H^T are those of Y^(1/2) H^T X H Y^(1/2)
    inner = ys @ np.swapaxes(h, -1, -2) @ x @ h @ ys
    eigs = np.linalg.eigvalsh(inner)[:, ::-1]
    vals = np.atleast_1d(zonal.zonal_eval(kappa, eigs))
    xe = np.linalg.eigvalsh(x)[::-1]
    ye = np.linalg.eigvalsh(y)[::-1]
    ident = zonal.zonal_identity_value(kappa, m)
    analytic = 0.0 if ident == 0 else zonal.zonal_eval(kappa, xe) * zonal.zonal_eval(kappa, ye) / ident
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.inf
    return OracleResult(float(np.mean(vals)), se, float(analytic))


def selberg_closed_form(a, b, kappa, n) -> float:
    """Unordered integral ``n! T(a, b)`` over ``(0, 1)^n``."""
    kappa = Partition(kappa)
    if kappa.length > n:
        return 0.0
    ident = zonal.zonal_identity_value(kappa, n)
    log_gammas = (
        multivariate_log_gamma(n, 0.5 * n) - 0.5 * n * n * math.log(math.pi)
        + multivariate_log_gamma(n, a) + multivariate_log_gamma(n, b) - multivariate_log_gamma(n, a + b)
    )
    ratio = pochhammer_partition(a, kappa) / pochhammer_partition(a + b, kappa)
    return math.exp(gammaln(n + 1) + log_gammas) * ratio * ident


def oracle_selberg(a, b, kappa, n, replications, rng) -> OracleResult:
    """Plain Monte Carlo over ``(0, 1)^n`` of
    ``C_kappa(X) |X|^(a-(n+1)/2) |I-X|^(b-(n+1)/2) prod_{i<j} |x_i - x_j|``.
    """
    if not (a > 0.5 * (n - 1) and b > 0.5 * (n - 1)):
        raise ValueError("Selberg integral needs a, b > (n - 1)/2")
    kappa = Partition(kappa)
    u = rng.random((replications, n))
    f = np.prod(u, axis=1) ** (a - 0.5 * (n + 1)) * np.prod(1 - u, axis=1) ** (b - 0.5 * (n + 1))
    i, j = np.triu_indices(n, 1)
    f = f * np.prod(np.abs(u[:, i] - u[:, j]), axis=1)
    if kappa.length > n:
        vals = np.zeros(replications)
    else:
        vals = f * np.atleast_1d(zonal.zonal_eval(kappa, np.sort(u, axis=1)[:, ::-1]))
    se = float(np.std(vals, ddof=1) / math.sqrt(replications))
    return OracleResult(float(np.mean(vals)), se, selberg_closed_form(a, b, kappa, n))
