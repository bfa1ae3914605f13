import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvks import selection as S
from kdvks.elliptic import complete_elliptic


@pytest.mark.parametrize("k", [0.3, 0.6, 0.9, 0.99])
def test_residual_closed_form(k):
    assert abs(S.selection_residual(k, float(S.canonical_kappa(k)))) <= 1e-9


@given(st.floats(1e-3, 1 - 1e-6))
@settings(max_examples=40, deadline=None)
def test_residual_everywhere(k):
    assert abs(S.selection_residual(k, float(S.canonical_kappa(k)))) <= 1e-9


def test_residual_quadratic_in_kappa():
    k = 0.7
    g = float(S.canonical_kappa(k))
    assert S.selection_residual(k, 2 * g) == pytest.approx(3 * g * g, rel=1e-9)
    r = [S.selection_residual(k, s * g) for s in (0.5, 1.0, 1.5)]
    assert r[0] < r[1] < r[2]


def test_small_k_limit():
    # near k = 0 the selected wave has unit wavenumber: X -> 2 pi
    assert float(S.period(1e-4)) == pytest.approx(2 * np.pi, rel=1e-8)
    assert float(S.canonical_kappa(1e-4)) == pytest.approx(complete_elliptic(1e-4).K / np.pi, rel=1e-8)


def test_series_branch_continuity():
    k = 0.2
    assert float(S.kappa_squared(k - 1e-12)) == pytest.approx(float(S.kappa_squared(k + 1e-12)), rel=1e-11)


def test_delta_bar_ratio():
    ks = np.linspace(0.01, 0.999, 60)
    K = complete_elliptic(ks).K
    ratio = S.delta_bar(ks) / (K * S.selection_kappa(ks) / np.pi) ** 2
    assert np.allclose(ratio, 3.0, rtol=1e-9)
    assert np.all(S.delta_bar(ks) > 0)
    assert np.isfinite(S.delta_bar(1e-8))


def test_kappa_derivative_fd():
    for k in (0.1, 0.5, 0.95):
        h = 1e-6
        fd = (S.selection_kappa(k + h) - S.selection_kappa(k - h)) / (2 * h)
        assert float(S.selection_kappa_derivative(k)) == pytest.approx(float(fd), rel=1e-6)


def test_period_monotone():
    ks = np.linspace(1e-3, 1 - 1e-7, 200)
    assert np.all(np.diff(S.period(ks)) > 0)


@given(st.floats(0.01, 0.9999))
def test_period_roundtrip(k):
    X = float(S.period(k))
    kk = S.modulus_from_period(X)
    assert abs(float(S.period(kk)) - X) <= 1e-10 * X
    if k >= 0.1:
        # X - 2 pi ~ k^4, so k itself is only well determined away from 0
        assert kk == pytest.approx(k, abs=1e-10)


def test_range_errors():
    with pytest.raises(S.PeriodRangeError):
        S.modulus_from_period(1.0)
    with pytest.raises(S.PeriodRangeError):
        S.modulus_from_period(40.0)


def test_select_13():
    sw = S.select(13.0)
    assert 0 < sw.k < 1
    assert sw.X == pytest.approx(13.0, abs=1e-10)
    assert abs(sw.residual) <= 1e-9


def test_zero_mean_gauge():
    w = S.zero_mean_wave(0.9)
    from kdvks.cnoidal import averages
    assert abs(averages(w).mean) < 1e-12
