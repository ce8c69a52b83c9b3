import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ewishart.eigdist import (
    BracketError,
    LargestEigenvalueCdf,
    NonMonotoneError,
    WishartSpec,
    cdf_lmax,
    cdf_lmax_kotz,
    cdf_lmax_t_model,
    eigenvalue_vector,
    gaussian_reduction_cdf,
    joint_density,
    quantile_lmax,
)
from ewishart.generators import GeneratorModel, ModelError


@pytest.mark.parametrize("x", [0.3, 1.0, 3.0, 8.0])
def test_gaussian_rank_one_is_chi_square(x):
    # n = 1: l1 = |x|^2 with x ~ N(0, I_3)
    spec = WishartSpec.build(3, 1, [1, 1, 1], "gaussian")
    p, _ = cdf_lmax(spec, x, 120)
    assert p == pytest.approx(stats.chi2.cdf(x, 3), abs=1e-12)


@pytest.mark.parametrize("x", [0.5, 2.0, 6.0])
def test_gaussian_wide_scalar_case(x):
    # m = 1 < n: l1 = 2 * chi2_3 with sigma = 2
    spec = WishartSpec.build(1, 3, [2.0], "gaussian")
    p, _ = cdf_lmax(spec, x, 120)
    assert p == pytest.approx(stats.chi2.cdf(x / 2, 3), abs=1e-12)


@pytest.mark.parametrize("x", [0.5, 3.0, 10.0])
def test_t_rank_one_is_f_distribution(x):
    # n = 1: l1 / m ~ F(m, rho)
    spec = WishartSpec.build(3, 1, [1, 1, 1], "t:rho=7")
    p, _ = cdf_lmax(spec, x, 150)
    assert p == pytest.approx(stats.f.cdf(x / 3, 3, 7), abs=1e-10)


@pytest.mark.parametrize("x", [1.0, 5.0, 12.0])
def test_kotz_rank_one_is_gamma(x):
    # n = 1: |x|^2 ~ Gamma(m/2 + q - 1, scale 1/theta)
    spec = WishartSpec.build(3, 1, [1, 1, 1], "kotz1:theta=0.5,q=2")
    p, _ = cdf_lmax(spec, x, 150)
    assert p == pytest.approx(stats.gamma.cdf(x, 2.5, scale=2.0), abs=1e-10)


def test_scalar_median():
    spec = WishartSpec.build(1, 1, [1.0], "gaussian")
    assert quantile_lmax(spec, 0.5, 80, tol=1e-10) == pytest.approx(stats.chi2.ppf(0.5, 1), abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 4.0), st.floats(0.5, 8.0))
def test_scale_equivariance(c, x):
    a = WishartSpec.build(3, 2, [3, 2, 1], "gaussian")
    b = WishartSpec.build(3, 2, [3 * c, 2 * c, c], "gaussian")
    assert cdf_lmax(b, c * x, 100)[1].value == pytest.approx(cdf_lmax(a, x, 100)[1].value, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("model", ["gaussian", "t:rho=7", "kotz1:theta=0.5,q=2"])
def test_forms_agree(model):
    spec = WishartSpec.build(3, 2, [3, 2, 1], model)
    # the unshifted matrix-t series only converges for x tr(Sigma^-1) < rho
    probes = (0.7, 2.0) if model.startswith("t") else (0.7, 2.0, 5.0)
    for x in probes:
        ref = LargestEigenvalueCdf(spec, 100, "kummer")(x)
        for form in ("series", "heterogeneous"):
            assert LargestEigenvalueCdf(spec, 100, form)(x) == pytest.approx(ref, rel=1e-9)


def test_unshifted_t_series_diverges_outside_radius():
    spec = WishartSpec.build(3, 2, [3, 2, 1], "t:rho=7")
    kummer = LargestEigenvalueCdf(spec, 100)(5.0)
    raw, report = LargestEigenvalueCdf(spec, 100, "series").evaluate(5.0)
    assert 0 < kummer < 1
    assert not report.converged and raw > 1


@pytest.mark.parametrize("sigma", [[1, 1, 1], [3, 2, 1]])
def test_explicit_paths_agree_with_generic(sigma):
    t_spec = WishartSpec.build(3, 2, sigma, "t:rho=7")
    k_spec = WishartSpec.build(3, 2, sigma, "kotz1:theta=0.5,q=2")
    for x in (1.0, 5.0, 15.0):
        assert cdf_lmax_t_model(t_spec, x, 80)[1].value == pytest.approx(cdf_lmax(t_spec, x, 80)[1].value, rel=1e-9)
        assert cdf_lmax_kotz(k_spec, x, 80)[1].value == pytest.approx(cdf_lmax(k_spec, x, 80)[1].value, rel=1e-9)


def test_explicit_paths_reject_other_models():
    spec = WishartSpec.build(3, 2, [1, 1, 1], "gaussian")
    with pytest.raises(ModelError):
        cdf_lmax_t_model(spec, 1.0, 10)
    with pytest.raises(ModelError):
        cdf_lmax_kotz(spec.with_model("kotz1:theta=1,q=2"), 1.0, 10)
    with pytest.raises(ModelError):
        cdf_lmax_t_model(WishartSpec.build(2, 3, [1, 1], "t:rho=9"), 1.0, 10)
    assert cdf_lmax_t_model(spec.with_model("t:rho=7"), 0.0, 10)[0] == 0.0


@pytest.mark.parametrize("m, n, sigma", [(3, 2, [3, 2, 1]), (2, 3, [2, 1])])
def test_gaussian_reduction(m, n, sigma):
    spec = WishartSpec.build(m, n, sigma, "gaussian")
    for x in (0.5, 5.0, 20.0):
        a = cdf_lmax(spec, x, 150, with_tail=False)[1].value
        b, _ = gaussian_reduction_cdf(m, n, sigma, x)
        assert a == pytest.approx(b, rel=1e-10)


def test_cdf_is_monotone_and_bounded():
    spec = WishartSpec.build(3, 2, [3, 2, 1], "gaussian")
    dist = LargestEigenvalueCdf(spec, 140)
    vals = np.array([dist(x) for x in np.linspace(0.1, 80, 60)])
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[0] > 0 and vals[-1] == pytest.approx(1.0, abs=1e-4) and vals[-1] <= 1 + 1e-12


def test_quantile_inverts_cdf():
    spec = WishartSpec.build(3, 2, [3, 2, 1], "kotz1:theta=0.5,q=2")
    dist = LargestEigenvalueCdf(spec, 70)
    for p in (0.1, 0.5, 0.9):
        x = dist.quantile(p, tol=1e-9)
        assert dist(x) == pytest.approx(p, abs=1e-9)
    with pytest.raises(ValueError):
        dist.quantile(1.0)


def test_low_truncation_is_detected():
    spec = WishartSpec.build(3, 2, [3, 2, 1], "t:rho=7")
    with pytest.raises((NonMonotoneError, BracketError)):
        LargestEigenvalueCdf(spec, 15).quantile(0.99)


def test_tail_bound_reported():
    spec = WishartSpec.build(3, 2, [3, 2, 1], "gaussian")
    p, report = cdf_lmax(spec, 5.0, 140)
    assert report.converged
    assert report.tail_bound is not None and report.tail_bound < 1e-10
    _, report = cdf_lmax(spec.with_model("t:rho=5"), 5.0, 100)
    assert report.tail_bound is None  # no certified derivative bound when mn > rho


def test_truncated_bound_covers_error():
    spec = WishartSpec.build(3, 1, [1, 1, 1], "t:rho=7")
    dist = LargestEigenvalueCdf(spec.with_model("t:rho=9"), 12, rel_tol=1e-300)
    raw, report = dist.evaluate(2.0, with_tail=True)
    err = abs(raw - stats.f.cdf(2.0 / 3, 3, 9))
    # the bound is essentially the exact remainder here; allow for rounding
    assert err <= report.tail_bound * (1 + 1e-9)


def test_joint_density_rank_one_is_chi_square_density():
    spec = WishartSpec.build(2, 1, [1, 1], "gaussian")
    for ell in (0.5, 2.0, 7.0):
        d, _ = joint_density(spec, [ell], 100)
        assert d == pytest.approx(stats.chi2.pdf(ell, 2), rel=1e-10)


def test_joint_density_integrates_to_one():
    spec = WishartSpec.build(2, 1, [2, 1], "gaussian")
    val, _ = integrate.quad(lambda e: joint_density(spec, [e], 150)[0], 0, 50, limit=200)
    assert val == pytest.approx(1.0, abs=1e-3)


def test_joint_density_shift_agrees():
    spec = WishartSpec.build(3, 2, [3, 2, 1], "kotz1:theta=0.5,q=2")
    a, _ = joint_density(spec, [4.0, 1.5], 100, shift=True)
    b, _ = joint_density(spec, [4.0, 1.5], 100, shift=False)
    assert a == pytest.approx(b, rel=1e-9)
    assert joint_density(spec, [2.0, 2.0], 50)[0] == 0.0
    with pytest.raises(ValueError):
        joint_density(spec, [1.0, 2.0], 50)
    with pytest.raises(ModelError):
        joint_density(WishartSpec.build(2, 2, [1, 1], "gaussian"), [2.0, 1.0], 50)


def test_spec_validation():
    with pytest.raises(ModelError):
        WishartSpec.build(3, 2, [1, 1], "gaussian")
    with pytest.raises(ModelError):
        WishartSpec(3, 2, [1, 1, 1], GeneratorModel.gaussian(2, 2))
    with pytest.raises(ValueError):
        LargestEigenvalueCdf(WishartSpec.build(2, 2, [1, 1], "gaussian"), 10, form="heterogeneous")
    with pytest.raises(ValueError):
        cdf_lmax(WishartSpec.build(2, 2, [1, 1], "gaussian"), 0.0, 10)
    spec = WishartSpec.build(3, 2, [1, 2, 3], "gaussian")
    assert spec.singular and spec.t == 2
    np.testing.assert_allclose(spec.inverse_eigenvalues, [1, 0.5, 1 / 3])


def test_eigenvalue_vector():
    np.testing.assert_array_equal(eigenvalue_vector([3, 2, 1]), [3, 2, 1])
    for bad in ([1, 2], [2, 2], [1, -1], []):
        with pytest.raises(ValueError):
            eigenvalue_vector(bad)
    assert eigenvalue_vector([2, 2], allow_ties=True).size == 2
