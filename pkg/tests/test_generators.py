import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ewishart.generators import (
    BoundUnavailable,
    GeneratorModel,
    ModelError,
    bound_violations,
    derivative_bound,
    derivative_sequence,
    h_derivative_at,
    h_derivative_at_zero,
    parse_model,
    shift_allowed,
)
from ewishart.numerics import signed_exp

MODELS = [
    GeneratorModel.gaussian(3, 2),
    GeneratorModel.matrix_t(7, 3, 2),
    GeneratorModel.kotz1(0.5, 2, 3, 2),
    GeneratorModel.kotz1(1.5, 3, 2, 1),
    GeneratorModel.kotz1(0.8, 1, 2, 2),
]


@pytest.mark.parametrize("model", MODELS, ids=str)
def test_generator_is_a_density(model):
    # int_{R^d} h(|x|^2) dx = pi^(d/2)/G(d/2) int_0^inf y^(d/2-1) h(y) dy
    d = model.mn
    val, _ = integrate.quad(lambda y: y ** (0.5 * d - 1) * model(y), 0, np.inf, limit=200)
    assert val * math.pi ** (0.5 * d) / math.gamma(0.5 * d) == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("model", MODELS, ids=str)
@pytest.mark.parametrize("c", [0.0, 0.7, 3.0])
def test_derivatives_match_finite_differences(model, c):
    step = 1e-3
    # the Kotz form is one-sided at 0, so check it just inside
    c0 = 0.5 if model.kind == "kotz1" and c == 0.0 else c
    s, lv = derivative_sequence(model, 2, c0)
    h = np.array([model(c0 - step), model(c0), model(c0 + step)])
    first = (h[2] - h[0]) / (2 * step)
    second = (h[2] - 2 * h[1] + h[0]) / step**2
    assert signed_exp(s[0], lv[0]) == pytest.approx(h[1], rel=1e-12)
    assert signed_exp(s[1], lv[1]) == pytest.approx(first, rel=1e-5)
    assert signed_exp(s[2], lv[2]) == pytest.approx(second, rel=1e-4)


def test_kotz_derivatives_at_zero():
    # h(y) = A y e^(-theta y): h^(k)(0) = A k (-theta)^(k-1)
    model = GeneratorModel.kotz1(0.5, 2, 3, 2)
    a = math.exp(model.log_norm())
    s, lv = derivative_sequence(model, 6)
    assert s[0] == 0
    for k in range(1, 7):
        assert signed_exp(s[k], lv[k]) == pytest.approx(a * k * (-0.5) ** (k - 1), rel=1e-13)


def test_t_derivatives_closed_form():
    model = GeneratorModel.matrix_t(7, 3, 2)
    a = 0.5 * (6 + 7)
    c = math.exp(model.log_norm())
    for k in range(8):
        expected = c * (-1) ** k * math.prod(a + j for j in range(k)) / 7**k
        assert signed_exp(*h_derivative_at_zero(model, k)) == pytest.approx(expected, rel=1e-12)


def test_gaussian_and_exponential_sequences():
    g = GeneratorModel.gaussian(2, 2)
    s, lv = derivative_sequence(g, 5, -1.0)
    expected = [(2 * math.pi) ** -2 * (-0.5) ** k * math.exp(0.5) for k in range(6)]
    np.testing.assert_allclose(s * np.exp(lv), expected, rtol=1e-13)
    s, lv = derivative_sequence(GeneratorModel.exponential(), 4, 2.0)
    np.testing.assert_allclose(s * np.exp(lv), math.exp(2.0), rtol=1e-15)


def test_high_order_derivatives_stay_finite():
    for model in MODELS:
        s, lv = derivative_sequence(model, 300, 1.0)
        assert np.all(np.isfinite(lv[s != 0]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 50.0), st.floats(0.0, 20.0), st.integers(1, 40))
def test_t_sequence_is_completely_monotone(rho, c, kmax):
    s, _ = derivative_sequence(GeneratorModel.matrix_t(rho, 2, 2), kmax, c)
    np.testing.assert_array_equal(s, [(-1) ** k for k in range(kmax + 1)])


def test_shift_domain():
    assert shift_allowed(GeneratorModel.gaussian(1, 1), -50.0)
    assert not shift_allowed(GeneratorModel.matrix_t(3, 1, 1), -3.0)
    assert shift_allowed(GeneratorModel.matrix_t(3, 1, 1), -2.9)
    assert not shift_allowed(GeneratorModel.kotz1(1, 2, 1, 1), -0.1)
    assert shift_allowed(GeneratorModel.kotz1(1, 1, 2, 1), -0.1)
    with pytest.raises(ModelError):
        derivative_sequence(GeneratorModel.kotz1(1, 2, 1, 1), 3, -1.0)
    with pytest.raises(ModelError):
        h_derivative_at(GeneratorModel.gaussian(1, 1), -1)


def test_parse_model():
    assert parse_model("t:rho=7", 3, 2) == GeneratorModel.matrix_t(7, 3, 2)
    assert parse_model("kotz1:theta=0.5,q=2", 3, 2) == GeneratorModel.kotz1(0.5, 2, 3, 2)
    assert parse_model("Normal", 2, 2).kind == "gaussian"
    assert str(parse_model("kotz1:q=2, theta=0.5", 3, 2)) == "kotz1:theta=0.5,q=2"
    for bad in ["t", "t:nu=3", "kotz1:theta=0.5,q=1.5", "wishart", "t:rho=-1", "kotz1:theta=0,q=2", "t:rho=x"]:
        with pytest.raises(ModelError):
            parse_model(bad, 3, 2)


def test_derivative_bound():
    assert derivative_bound(GeneratorModel.gaussian(3, 2)) == pytest.approx((2 * math.pi) ** -3)
    assert derivative_bound(GeneratorModel.matrix_t(7, 3, 2)) == pytest.approx(math.pi**-3)
    with pytest.raises(BoundUnavailable):
        derivative_bound(GeneratorModel.matrix_t(5, 3, 2))
    with pytest.raises(BoundUnavailable):
        derivative_bound(GeneratorModel.kotz1(1.5, 2, 3, 2))


def test_bound_holds_for_gaussian_but_not_for_t():
    assert bound_violations(GeneratorModel.gaussian(3, 2)) == []
    assert bound_violations(GeneratorModel.kotz1(0.5, 2, 3, 2), 200) == []
    # the stated matrix-t bound is only asymptotic in spirit: it fails early
    viol = bound_violations(GeneratorModel.matrix_t(7, 3, 2), 50)
    assert viol and viol[0] < 10
