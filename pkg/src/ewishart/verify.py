"""Self-check suites run by ``ewishart verify``.

Each suite returns a ``SuiteResult`` with the worst measured error and the
threshold it was held to.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import zonal
from .eigdist import (
    WishartSpec,
    cdf_lmax,
    cdf_lmax_kotz,
    cdf_lmax_t_model,
    gaussian_reduction_cdf,
)
from .generators import GeneratorModel
from .hypseries import SeriesSpec, rPs
from .montecarlo import make_rng, oracle_selberg, oracle_splitting_identity
from .partitions import enumerate_partitions

SUITES = ("zonal", "kummer", "splitting", "selberg", "dualpath", "gaussian")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: worst {self.measured:.3g} (limit {self.threshold:.3g})"
        if self.detail:
            text += f"; {self.detail}"
        return text + f" [{self.seconds:.1f}s]"


def random_spd_eigs(rng, m):
    return np.sort(rng.uniform(0.05, 3.0, m))[::-1]


def zonal_suite(max_degree=10, max_m=5, samples=100, seed=0, store=None) -> SuiteResult:
    """Sum identity ``sum_kappa C_kappa(X) = (tr X)^k`` and closed-form ``C_kappa(I_m)``."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(samples):
        m = int(rng.integers(1, max_m + 1))
        y = random_spd_eigs(rng, m)
        for k in range(max_degree + 1):
            _, vals, logscale = zonal.zonal_degree_values(k, y, store)
            total = math.fsum(vals.tolist()) * math.exp(logscale)
            worst = max(worst, abs(total - float(np.sum(y)) ** k) / float(np.sum(y)) ** k)
    for m in range(1, max_m + 1):
        for k in range(max_degree + 1):
            for kappa in enumerate_partitions(k, m):
                direct = zonal.zonal_eval(kappa, np.ones(m), store)
                closed = zonal.zonal_identity_value(kappa, m)
                worst = max(worst, abs(direct - closed) / closed)
    return SuiteResult("zonal", worst <= 1e-10, worst, 1e-10, f"k <= {max_degree}, m <= {max_m}")


KUMMER_CASES = (
    (GeneratorModel.gaussian(3, 2), (1.2, 0.7, 0.3)),
    (GeneratorModel.matrix_t(7, 3, 2), (0.5, 0.3, 0.2)),
    (GeneratorModel.kotz1(0.5, 2, 3, 2), (1.0, 0.6, 0.2)),
    (GeneratorModel.exponential(), (0.9, 0.4, 0.1)),
)


def kummer_suite(probes=(0.25, 0.5, 1.0, 1.5, 2.0), store=None) -> SuiteResult:
    """Unshifted versus Kummer-transformed ``1P1`` at several scalings."""
    worst = 0.0
    for model, eigs in KUMMER_CASES:
        spec = SeriesSpec((1.0,), (3.0,), model, max_degree=150, rel_tol=1e-16)
        for s in probes:
            x = s * np.asarray(eigs)
            plain, _ = rPs(replace(spec, kummer=False), x, store=store, with_tail=False)
            kum, _ = rPs(replace(spec, kummer=True), x, store=store, with_tail=False)
            worst = max(worst, abs(plain - kum) / abs(kum))
    return SuiteResult("kummer", worst <= 1e-9, worst, 1e-9, f"{len(KUMMER_CASES)} generators x {len(probes)} probes")


def splitting_suite(cases=20, replications=10**5, seed=1) -> SuiteResult:
    """Stiefel splitting identity, random ``(kappa, X, Y)`` with weight <= 4 and ``m <= 4``."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(2, 5))
        n = int(rng.integers(1, m + 1))
        k = int(rng.integers(1, 5))
        parts = enumerate_partitions(k, n)
        kappa = parts[int(rng.integers(len(parts)))]
        x = _random_spd(rng, m)
        y = _random_spd(rng, n)
        res = oracle_splitting_identity(kappa, x, y, replications, rng)
        worst = max(worst, res.z)
    return SuiteResult("splitting", worst <= 3.0, worst, 3.0, f"{cases} cases, N={replications}, in standard errors")


def _random_spd(rng, m):
    a = rng.standard_normal((m, m))
    return a @ a.T / m + 0.2 * np.eye(m)


SELBERG_CASES = ((1.5, 1.5), (2.0, 1.5), (1.5, 2.5), (3.0, 2.0))


def selberg_suite(replications=10**6, seed=2) -> SuiteResult:
    """Unordered Selberg-type integral for ``n = 2`` and all partitions of weight <= 3."""
    rng = make_rng(seed)
    worst = 0.0
    count = 0
    for a, b in SELBERG_CASES:
        for k in range(4):
            for kappa in enumerate_partitions(k, 2):
                res = oracle_selberg(a, b, kappa, 2, replications, rng)
                worst = max(worst, res.z)
                count += 1
    return SuiteResult("selberg", worst <= 3.0, worst, 3.0, f"{count} cases, N={replications}, in standard errors")


DUAL_PROBES = (1.0, 5.0, 10.0, 20.0, 30.0)


def dualpath_suite(K=100, probes=DUAL_PROBES) -> SuiteResult:
    """Generic CDF versus the explicit matrix-t ``F_K`` and the closed Kotz form."""
    worst = 0.0
    for sigma in ([1, 1, 1], [3, 2, 1]):
        t_spec = WishartSpec.build(3, 2, sigma, "t:rho=7")
        k_spec = WishartSpec.build(3, 2, sigma, "kotz1:theta=0.5,q=2")
        for x in probes:
            a = cdf_lmax(t_spec, x, K, with_tail=False)[1].value
            b = cdf_lmax_t_model(t_spec, x, K)[1].value
            c = cdf_lmax(k_spec, x, K, with_tail=False)[1].value
            d = cdf_lmax_kotz(k_spec, x, K)[1].value
            worst = max(worst, abs(a - b) / abs(b), abs(c - d) / abs(d))
    return SuiteResult("dualpath", worst <= 1e-9, worst, 1e-9, f"K={K}, probes {list(probes)}")


def gaussian_suite(K=150, probes=(0.5, 2.0, 5.0, 10.0, 20.0)) -> SuiteResult:
    """Gaussian generator through the generic CDF versus the classical ``1F1`` expression."""
    worst = 0.0
    for m, n, sigma in ((3, 2, [3, 2, 1]), (2, 3, [2, 1]), (3, 2, [1, 1, 1]), (2, 3, [1, 1])):
        spec = WishartSpec.build(m, n, sigma, "gaussian")
        for x in probes:
            a = cdf_lmax(spec, x, K, with_tail=False)[1].value
            b, _ = gaussian_reduction_cdf(m, n, sigma, x, K)
            worst = max(worst, abs(a - b) / abs(b))
    return SuiteResult("gaussian", worst <= 1e-10, worst, 1e-10, "(m, n) in {(3, 2), (2, 3)}")


def run_suite(name, max_degree=10, replications=None, seed=0, store=None) -> SuiteResult:
    start = time.perf_counter()
    if name == "zonal":
        res = zonal_suite(max_degree=max_degree, seed=seed, store=store)
    elif name == "kummer":
        res = kummer_suite(store=store)
    elif name == "splitting":
        res = splitting_suite(replications=replications or 10**5, seed=seed + 1)
    elif name == "selberg":
        res = selberg_suite(replications=replications or 10**6, seed=seed + 2)
    elif name == "dualpath":
        res = dualpath_suite()
    elif name == "gaussian":
        res = gaussian_suite()
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    res.seconds = time.perf_counter() - start
    return res
