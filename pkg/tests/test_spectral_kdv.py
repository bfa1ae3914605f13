import mpmath as mp
import numpy as np
import pytest

from kdvks import evans
from kdvks import selection as S
from kdvks import spectral_kdv as sk


@pytest.fixture(scope="module")
def k13():
    return S.modulus_from_period(13.0)


def test_lambda0_formula(k13):
    w = S.zero_mean_wave(k13)
    e1, e2, e3 = sk.band_edges(k13)
    for eta in (e1 - 0.3, e1 - 7.0, 0.5 * (e2 + e3), e2 + 0.1 * (e3 - e2)):
        bp = sk.band_sample(k13, eta)
        ref = 8 * w.kappa**3 * np.sqrt(abs(eta - e1) * abs(eta - e2) * abs(eta - e3))
        assert bp.lambda0.real == 0
        assert bp.lambda0.imag == pytest.approx(ref, rel=1e-12)
        assert -np.pi / w.X <= bp.xi < np.pi / w.X


def test_edges_and_gap(k13):
    e1, e2, e3 = sk.band_edges(k13)
    for eta in (e1, e3, e2):
        with pytest.raises(sk.BandEdgeError):
            sk.band_sample(k13, eta)
    with pytest.raises(sk.BandGapError):
        sk.band_sample(k13, 0.5 * (e1 + e2))
    # lambda0 -> 0 approaching the edges
    for b, q0 in (("lower", 1e-4), ("upper", 1e-4), ("upper", 1 - 1e-4)):
        q1 = q0 / 100 if q0 < 0.5 else 1 - (1 - q0) / 100
        a, b1 = (abs(sk.band_point_from_param(k13, b, q).lambda0) for q in (q0, q1))
        assert b1 == pytest.approx(a / 10, rel=1e-2)


def test_evans_midband_k08():
    k = 0.8
    e1, e2, e3 = sk.band_edges(k)
    bp = sk.band_sample(k, 0.5 * (e2 + e3))
    r = evans.evans_check(k, [(bp.lambda0, bp.xi)])[0]
    assert r.relative <= 1e-6


def test_dn_integrand_rejected():
    res = evans.evans_band_check(13.0, 6, integrand="dn")
    assert max(r.relative for r in res) > 1e-3


@pytest.mark.parametrize("band,q", [("upper", 0.3), ("lower", 0.5), ("lower", 12.0)])
def test_eigenfunction_pair(k13, band, q):
    bp = sk.band_point_from_param(k13, band, q)
    u, v, diag = sk.eigenfunction_pair(bp)
    assert diag["ode_residual"] <= 1e-7
    assert diag["v_identity"] <= 1e-8
    m = np.abs(u.values())
    assert np.allclose(m, np.abs(u.envelope))


def test_lambda1_stable_band(k13):
    r = sk.stability_index(13.0, 120, refine=False, keep_samples=True)
    for s in r.samples:
        if s.valid:
            assert s.re_rl1 < 0
            assert abs(s.lambda1.imag) <= 1e-6 * max(1, abs(s.re_rl1))
            assert abs(s.lambda1.real - s.re_rl1) <= 1e-8 * max(1, abs(s.re_rl1))


def test_branch_symmetry(k13):
    for band, q in (("upper", 0.4), ("lower", 2.0), ("lower", 0.05), ("upper", 0.9), ("lower", 30.0)):
        a = sk.lambda1(sk.band_point_from_param(k13, band, q, branch=1))
        b = sk.lambda1(sk.band_point_from_param(k13, band, q, branch=-1))
        assert b.band.xi == pytest.approx(-a.band.xi, abs=1e-12) or abs(abs(a.band.xi) - np.pi / a.band.X) < 1e-9
        assert b.re_rl1 == pytest.approx(a.re_rl1, rel=1e-10)
        assert b.lambda1 == pytest.approx(np.conj(a.lambda1), rel=1e-7)


def test_refinement(k13):
    bp = sk.band_point_from_param(k13, "upper", 0.5)
    n = sk._spike_n(k13, "upper", 0.5)
    a, b = sk.lambda1(bp, n), sk.lambda1(bp, 2 * n)
    assert abs(a.re_rl1 - b.re_rl1) <= 1e-8
    assert abs(a.lambda1 - b.lambda1) <= 1e-8


def _form_a_mp(bp, n):
    """Cancellation-free real part of lambda1 in 30-digit arithmetic."""
    w = S.zero_mean_wave(bp.k)
    with mp.workdps(30):
        k, kap, u0 = mp.mpf(w.k), mp.mpf(w.kappa), mp.mpf(w.u0)
        m = k * k
        kc2 = (1 - k) * (1 + k)
        A = 12 * m * kap**2
        u1, u2, u3 = u0 + 12 * kap**2 * (m - 1), u0, u0 + A
        c = (u1 + u2 + u3) / 3
        a = -(u1 * u2 + u1 * u3 + u2 * u3) / 6
        s = mp.mpf(bp.param)
        mu = 8 * kap**3 * mp.sqrt(s * (1 - s) * kc2**2 * (1 - s * kc2))
        X = 2 * mp.ellipk(m) / kap
        acc = [mp.mpf(0)] * 5
        for j in range(n):
            z = kap * X * j / n
            sn, cn, dn = (mp.ellipfun(f, z, m=m) for f in ("sn", "cn", "dn"))
            U = u0 + A * cn**2
            d1 = -2 * A * kap * sn * cn * dn / 3
            d2 = (a + c * U - U**2 / 2) / 3
            d3 = (c - U) * d1
            p = 4 * kap**2 * (m * cn**2 + (1 - s) * kc2)
            g = (d1**2 + mu**2) / p
            acc[0] += g
            acc[1] += (2 * d2 / p - g / p) * (d2 - mu**2 / p)
            acc[2] += d3 * d1 / p
            acc[3] += 2 * d2 / p - g / p + U - c
        num = (-acc[0] + acc[1] - acc[2]) / n
        den = -acc[3] / n
        return float(num / den), float(mu)


def test_cancellation_free_route_extended_precision():
    k = S.modulus_from_period(30.0)
    bp = sk.band_point_from_param(k, "upper", 0.5)
    assert abs(bp.lambda0) < 1e-6
    n = 1024
    s = sk.lambda1(bp, n)
    ref, mu = _form_a_mp(bp, n)
    assert mu == pytest.approx(bp.lambda0.imag, rel=1e-12)
    assert s.re_rl1 == pytest.approx(ref, rel=1e-9)


def test_conditioning_flag():
    k = S.modulus_from_period(30.0)
    near = sk.lambda1(sk.band_point_from_param(k, "upper", 1e-3))
    assert not near.conditioned
    assert sk.lambda1(sk.band_point_from_param(S.modulus_from_period(13.0), "upper", 0.5)).conditioned


def test_points_at_xi(k13):
    X = S.period(k13)
    xi = 0.3 * np.pi / X
    pts = sk.band_points_at_xi(k13, xi, "lower")
    assert len(pts) >= 3
    for bp in pts:
        assert bp.xi == pytest.approx(xi, abs=1e-12)
    assert [p.param for p in pts] == sorted(p.param for p in pts)


def test_origin_value_gauge():
    k = S.modulus_from_period(13.0)
    assert sk.lambda1_origin(k) < 0


@pytest.mark.parametrize("X,sign", [(7.0, 1), (13.0, -1), (28.0, 1)])
def test_index_sign(X, sign):
    r = sk.stability_index(X, 200)
    assert np.sign(r.ind) == sign
    assert r.ind >= r.origin_lambda1
    assert r.n_invalid <= 0.05 * r.n_samples


def test_edge_refinement_does_not_raise_max():
    a = sk.stability_index(13.0, 200)
    b = sk.stability_index(13.0, 400)
    assert abs(a.ind - b.ind) <= 1e-4
    assert a.argmax_band != "origin" or a.ind == a.origin_lambda1
