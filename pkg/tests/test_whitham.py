import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvks import selection as S
from kdvks import whitham as W
from kdvks.perturbed_profile import correctors, lambda1_origin


def test_b_limits():
    b1, b2, b3 = W.b_coefficients(1e-6)
    assert b1 == pytest.approx(-2.0, abs=1e-9)
    assert b2 == pytest.approx(-2.0, abs=1e-9)
    assert b3 == pytest.approx(1.0, abs=1e-9)


def test_b_series_switch_continuity():
    k = W._B_SERIES_K
    lo = W.b_coefficients(k * (1 - 1e-12))
    hi = W.b_coefficients(k * (1 + 1e-12))
    assert np.allclose(lo, hi, rtol=1e-10)


def test_strict_ordering_example():
    a1, a2, a3 = W.kdv_char_velocities(0.5, 1.0, 0.0)
    assert a1 < a2 < a3
    with pytest.raises(ValueError):
        W.kdv_char_velocities(0.5, -1.0, 0.0)


@given(st.floats(6.4, 30.0))
@settings(max_examples=40, deadline=None)
def test_hyperbolic(X):
    a1, a2, a3 = W.subchar_report(X).alphas
    assert a1 < a2 < a3


@pytest.mark.parametrize("X", [7.0, 9.0, 13.0, 20.0, 30.0])
def test_quadratic_vs_jacobian(X):
    k = S.modulus_from_period(X)
    rv = W.relaxed_char_velocities(k)
    fd = W.relaxed_jacobian_fd(k)
    b = np.array(sorted(rv.betas, key=lambda z: (z.real, z.imag)))
    assert np.max(np.abs(b - fd)) <= 1e-6 * max(1.0, np.max(np.abs(b)))


def test_alternative_quadratic_disagrees():
    k = S.modulus_from_period(13.0)
    A, B, C = W.alternative_relaxed_quadratic(k)
    roots = np.sort(np.roots([A, -B, C]).real)
    fd = W.relaxed_jacobian_fd(k).real
    assert np.max(np.abs(roots - fd)) > 1e-2


@pytest.mark.parametrize("X", [9.0, 20.0])
def test_galilean_shift(X):
    k = S.modulus_from_period(X)
    w = S.zero_mean_wave(k)
    s = 1.7
    base = W._report_k(k, X)
    shifted = W._report_k(k, X, u0=w.u0 + s)
    assert np.allclose(np.array(shifted.alphas) - base.alphas, s, atol=1e-10)
    assert np.allclose(np.array(shifted.betas) - np.array(base.betas), s, atol=1e-9)
    assert np.allclose(shifted.margins, base.margins, atol=1e-9)
    assert (shifted.s1, shifted.s2, shifted.s3) == (base.s1, base.s2, base.s3)


def test_reports():
    r13 = W.subchar_report(13.0)
    assert r13.s1 and r13.s2 and r13.s3
    assert not W.subchar_report(7.0).s2
    r30 = W.subchar_report(30.0)
    assert r30.s1 and r30.s2 and r30.s3
    for r in (r13, r30):
        assert (r.margins[0] > 0) == r.s1 and (r.margins[1] > 0) == r.s2 and (r.margins[2] > 0) == r.s3


def test_discriminant_positive_upper_range():
    for X in np.linspace(8.5, 30, 40):
        assert W.relaxed_char_velocities(S.modulus_from_period(X)).real


def test_margin_continuity():
    Xs = np.linspace(6.4, 30, 500)
    m = np.array([W.subchar_report(X).margins[1] for X in Xs])
    assert np.max(np.abs(np.diff(m))) <= 10 * (Xs[1] - Xs[0])


def test_critical_period():
    Xc = W.critical_period()
    assert 7.5 <= Xc <= 8.5
    assert W.s2_margin(Xc + 0.5) > 0
    assert W.s2_margin(Xc - 0.5) < 0


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9, 0.999])
def test_P_variance_oracle(k):
    assert float(W.P_coefficient(k)) == pytest.approx(W.P_quadrature(k), rel=1e-10, abs=1e-14)
    assert abs(float(W.P_coefficient(k, "alternative")) - W.P_quadrature(k)) > 1e-6 or k < 0.2


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
def test_P_derivative_fd(k):
    h = 1e-6
    for v in ("derived", "alternative"):
        fd = (W.P_coefficient(k + h, v) - W.P_coefficient(k - h, v)) / (2 * h)
        assert float(W.P_derivative(k, v)) == pytest.approx(float(fd), rel=1e-6, abs=1e-10)


def test_relaxation_rate_readings():
    Xs = np.linspace(2 * np.pi, 30, 60)
    ks = [S.modulus_from_period(X) for X in Xs]
    lam = np.array([W.homogeneous_relaxation_rate(k) for k in ks])
    assert np.all(lam < 0) and np.all(np.isfinite(lam))
    comp = np.array([W.homogeneous_relaxation_rate(k, kprime="complementary") for k in ks[1:]])
    # the complementary-integral reading changes sign on the range, so it is rejected
    assert np.any(comp > 0)


def test_relaxation_rate_sign_matches_origin():
    for X in (7.0, 13.0, 28.0):
        k = S.modulus_from_period(X)
        assert np.sign(W.homogeneous_relaxation_rate(k)) == np.sign(lambda1_origin(correctors(k, 512)))


def test_degenerate_quadratic():
    with pytest.raises(W.QuadraticDegeneracyError):
        W._solve_quadratic(0.0, 1.0, 1.0)
