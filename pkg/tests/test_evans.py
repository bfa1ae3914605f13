import numpy as np
import pytest

from kdvks import evans as E
from kdvks import selection as S
from kdvks import spectral_kdv as sk


@pytest.fixture(scope="module")
def k13():
    return S.modulus_from_period(13.0)


@pytest.mark.parametrize("X", [7.0, 13.0, 20.0, 25.0, 30.0])
def test_liouville(X):
    k = S.modulus_from_period(X)
    for r in E.monodromy_batch(k, [0.0, 0.3j, 0.5]):
        assert abs(r.det_R - 1) <= 1e-8


@pytest.mark.parametrize("X", [7.0, 13.0, 20.0])
def test_origin_double_root(X):
    k = S.modulus_from_period(X)
    r = E.monodromy_kdv(k, 0.0)
    assert abs(np.linalg.det(r.R - np.eye(3))) <= 1e-7
    assert abs(E.evans_eval(k, 0.0, 0.0)) <= 1e-7


def test_origin_relative_large_period():
    # entries of R grow like exp(sqrt(c) X); beyond X ~ 20 only the relative measure is meaningful
    k = S.modulus_from_period(30.0)
    r = E.evans_check(k, [(0.0, 0.0)])[0]
    assert r.relative <= 1e-12


def test_off_spectrum(k13):
    assert abs(E.evans_eval(k13, 0.5, 0.0)) > 1e-3
    assert abs(E.evans_eval(k13, 0.5, 0.2)) > 1e-3


def test_periodic_in_xi(k13):
    X = float(S.period(k13))
    for lam, xi in ((0.2j, 0.1), (0.5, -0.2), (0.05 + 1j, 0.3)):
        a = E.evans_eval(k13, lam, xi)
        b = E.evans_eval(k13, lam, xi + 2 * np.pi / X)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_convergence_order(k13):
    assert E.convergence_slope(k13, 0.4j) >= 3.7
    a = E.monodromy_kdv(k13, 0.4j, tol=1e-12)
    b = E.monodromy_kdv(k13, 0.4j, n_steps=256, tol=1e-13)
    assert np.max(np.abs(a.R - b.R)) <= 1e-9 * max(1.0, np.max(np.abs(b.R)))


@pytest.mark.parametrize("X", [9.0, 13.0, 20.0, 25.0])
def test_band_samples_are_roots(X):
    res = E.evans_band_check(X, 10)
    assert max(r.relative for r in res) <= 1e-8


def test_hill_conjugate_symmetry(k13):
    a = E.hill_spectrum(k13, 0.05, 0.1).eigenvalues
    b = E.hill_spectrum(k13, 0.05, -0.1).eigenvalues
    idx = E.match_nearest(np.conj(a), b)
    assert np.max(np.abs(np.conj(a) - b[idx])) <= 1e-8


def test_hill_zero_modes(k13):
    # the mean mode gives an exact zero at xi = 0; the translation eigenvalue is displaced
    # only by the O(delta^3) residual of the truncated profile
    near = []
    for d in (0.05, 0.025):
        ev = np.sort(np.abs(E.hill_spectrum(k13, d, 0.0).eigenvalues))
        assert ev[0] <= 1e-6
        near.append(ev[1])
    assert 6.0 <= near[0] / near[1] <= 10.0


def test_hill_delta_range(k13):
    for d in (0.0, -0.1, 0.3):
        with pytest.raises(ValueError):
            E.hill_spectrum(k13, d, 0.0)


def test_hill_truncation_warning():
    k = S.modulus_from_period(30.0)
    with pytest.warns(UserWarning):
        E.hill_spectrum(k, 0.05, 0.0, 16)


def test_continuity_in_delta():
    r = E.hill_consistency(13.0, (0.1, 0.05, 0.025))
    dist = [abs(e - r.lambda0) for e in r.eigenvalues]
    for a, b in zip(dist, dist[1:]):
        assert 1.7 <= a / b <= 2.3


def test_perturbation_consistency():
    r = E.hill_consistency(13.0, (0.05, 0.025, 0.0125))
    assert r.gaps[0] <= 5e-3
    assert all(3.0 <= q <= 5.0 for q in r.ratios)


def test_hill_vs_evans(k13):
    pts = [sk.band_point_from_param(k13, b, q) for b, q in
           (("upper", 0.2), ("upper", 0.7), ("lower", 0.1), ("lower", 0.5), ("lower", 1.0))]
    for bp in pts:
        assert E.evans_check(k13, [(bp.lambda0, bp.xi)])[0].relative <= 1e-8
        lam, _ = E.hill_eigenvalue_near(k13, 1e-3, bp.xi, bp.lambda0)
        assert abs(lam - bp.lambda0) <= 5e-3
        # the residual offset is the first-order drift delta * lambda1
        assert abs(lam - bp.lambda0 - 1e-3 * sk.lambda1(bp).lambda1) <= 1e-5


def test_match_nearest_injective():
    assert E.match_nearest([0, 1j], [1j, 0.1]) == [1, 0]
    with pytest.raises(ValueError):
        E.match_nearest([0, 0.01], [0.0, 5.0])
