"""Linearized-KdV Bloch spectrum of the selected wave and its O(delta) correction.

Band parameterization: with p(x) = 4 kappa^2 (dn^2(kappa x) - k^2 + eta) the function
    u(x) = (p' - lam) exp(-lam int_0^x dy / p)
solves u''' + ((U0 - c0) u)' + lam u = 0 when lam^2 = -64 kappa^6 Pi(eta),
Pi = (eta - eta1)(eta - eta2)(eta - eta3), eta1 = k^2 - 1, eta2 = 2k^2 - 1, eta3 = k^2.
The spectrum is the set where the exponent's period average is imaginary:
eta <= eta1 (lower band) or eta2 <= eta <= eta3 (upper band). The Bloch parameter is
xi = Im(-lam <1/p>) reduced to [-pi/X, pi/X).

Inside the bands p has a fixed sign, so the exponent is purely imaginary and every
pairing below reduces to an X-periodic integrand without exponentials.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import warnings

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import selection
from .cnoidal import PeriodicGrid, WaveParams, profile
from .elliptic import complete_elliptic, jacobi_sn_cn_dn
from .perturbed_profile import correctors, lambda1_origin as _lambda1_origin_cs

EDGE_EXCLUSION = 1e-4
N_MIN = 512
N_MAX = 1 << 17
COND_MIN = 1e-7


class BandGapError(ValueError):
    """eta lies in a spectral gap."""


class BandEdgeError(ValueError):
    """eta is within tolerance of a band edge, where lam0 -> 0."""


class ResolutionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BandPoint:
    eta: float
    branch: int
    lambda0: complex
    xi: float
    N: int
    k: float
    X: float
    band: str  # "upper" or "lower"
    param: float  # s = (eta3 - eta)/kc^2 on the upper band, t = eta1 - eta on the lower
    xi_raw: float


def band_edges(k: float) -> tuple[float, float, float]:
    return k * k - 1.0, 2.0 * k * k - 1.0, k * k


def _kc2(k: float) -> float:
    return (1.0 - k) * (1.0 + k)


def _classify(k: float, eta: float, tol: float) -> tuple[str, float]:
    e1, e2, e3 = band_edges(k)
    kc2 = _kc2(k)
    if eta <= e1:
        t = e1 - eta
        if t < tol:
            raise BandEdgeError(f"eta={eta!r} at the band edge eta1")
        return "lower", t
    if e2 <= eta <= e3:
        s = (e3 - eta) / kc2
        if min(s, 1.0 - s) * kc2 < tol:
            raise BandEdgeError(f"eta={eta!r} at a band edge of [eta2, eta3]")
        return "upper", s
    raise BandGapError(f"eta={eta!r} is in a spectral gap")


def _mod_Pi(k: float, band: str, param: float) -> float:
    kc2 = _kc2(k)
    if band == "upper":
        s = param
        return s * (1.0 - s) * kc2 * kc2 * (1.0 - s * kc2)
    t = param
    return t * (t + k * k) * (t + 1.0)


def _spike_n(k: float, band: str, param: float, n_min: int = N_MIN) -> int:
    """Grid size resolving the narrowest feature of 1/p, width ~ sqrt(gap)/k in z."""
    K = complete_elliptic(k).K
    gap = 1.0 - param if band == "upper" else param
    width = min(np.sqrt(max(gap, 1e-300)), 1.0) / k
    n = int(2 ** np.ceil(np.log2(max(n_min, 30.0 * 2.0 * K / width))))
    return min(n, N_MAX)


def _p_values(k: float, kap: float, band: str, param: float, z: np.ndarray, integrand: str = "dn2"):
    sn, cn, dn = jacobi_sn_cn_dn(z, k)
    kc2 = _kc2(k)
    if integrand == "dn":
        # alternative reading dn in place of dn^2, kept for the oracle comparison
        e3 = k * k
        eta = e3 - param * kc2 if band == "upper" else k * k - 1.0 - param
        return 4.0 * kap * kap * (dn - k * k + eta)
    if integrand != "dn2":
        raise ValueError("integrand must be 'dn2' or 'dn'")
    if band == "upper":
        return 4.0 * kap * kap * (k * k * cn * cn + (1.0 - param) * kc2)
    return -4.0 * kap * kap * (k * k * sn * sn + param)


def mean_inverse_p(k: float, kap: float, band: str, param: float, integrand: str = "dn2",
                   tol: float = 1e-12) -> float:
    """<1/p> over a period by the periodic trapezoid rule with doubling."""
    K = complete_elliptic(k).K
    n = _spike_n(k, band, param, 64) // 4
    prev = None
    while True:
        z = np.arange(n) * (2.0 * K / n)
        cur = float(np.mean(1.0 / _p_values(k, kap, band, param, z, integrand)))
        if prev is not None and abs(cur - prev) <= tol * abs(cur):
            return cur
        if n >= 4 * N_MAX:
            raise ResolutionError("<1/p> did not converge")
        prev = cur
        n *= 2


def _reduce(xi_raw: float, X: float) -> tuple[float, int]:
    period = 2.0 * np.pi / X
    N = int(np.floor((xi_raw + 0.5 * period) / period))
    return xi_raw - N * period, N


def band_sample(k: float, eta: float, branch: int = 1, N: int | None = None,
                integrand: str = "dn2", edge_tol: float = 1e-14) -> BandPoint:
    """lam0 and xi at a point eta of the spectral bands of the selected wave of modulus k.

    N, when given, overrides the reduction and returns xi_raw - 2 pi N / X.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    w = selection.selected_wave(k)
    band, param = _classify(w.k, float(eta), edge_tol)
    mu = 8.0 * w.kappa**3 * np.sqrt(_mod_Pi(w.k, band, param))
    lam = complex(0.0, branch * mu)
    m = mean_inverse_p(w.k, w.kappa, band, param, integrand)
    xi_raw = float(-branch * mu * m)
    X = w.X
    if N is None:
        xi, N = _reduce(xi_raw, X)
    else:
        xi = xi_raw - 2.0 * np.pi * N / X
    return BandPoint(float(eta), branch, lam, float(xi), int(N), w.k, X, band, float(param), xi_raw)


def band_point_from_param(k: float, band: str, param: float, branch: int = 1) -> BandPoint:
    e1, _, e3 = band_edges(k)
    eta = e3 - param * _kc2(k) if band == "upper" else e1 - param
    w = selection.selected_wave(k)
    mu = 8.0 * w.kappa**3 * np.sqrt(_mod_Pi(w.k, band, param))
    m = mean_inverse_p(w.k, w.kappa, band, param)
    xi_raw = float(-branch * mu * m)
    xi, N = _reduce(xi_raw, w.X)
    return BandPoint(float(eta), branch, complex(0.0, branch * mu), float(xi), N, w.k, w.X,
                     band, float(param), xi_raw)


def band_points_at_xi(k: float, xi: float, band: str = "lower", branch: int = 1,
                      param_max: float = 20.0, n_scan: int = 400) -> list[BandPoint]:
    """All band points of the given band with reduced Bloch parameter xi, ordered by param.

    The unreduced xi_raw is continuous along the band, so every crossing of
    xi + j 2 pi / X on a scan grid is refined by brentq.
    """
    X = selection.period(k)
    period = 2.0 * np.pi / X
    if band == "upper":
        grid = np.linspace(EDGE_EXCLUSION, 1.0 - EDGE_EXCLUSION, n_scan)
    else:
        grid = np.geomspace(1e-4 * max(_kc2(k), 1.0), param_max, n_scan)
    raw = np.array([band_point_from_param(k, band, q, branch).xi_raw for q in grid])
    lev = np.floor((raw - xi) / period)
    out = []
    for i in np.nonzero(np.diff(lev))[0]:
        for j in range(int(min(lev[i], lev[i + 1])) + 1, int(max(lev[i], lev[i + 1])) + 1):
            target = xi + j * period
            q = brentq(lambda q: band_point_from_param(k, band, q, branch).xi_raw - target,
                       grid[i], grid[i + 1], xtol=1e-15, rtol=1e-14)
            out.append(band_point_from_param(k, band, q, branch))
    return out


@dataclass(frozen=True)
class BlochGrid:
    """f(x) = exp(i xi x) * envelope(x) sampled on x_j = j X / n; the envelope is X-periodic."""
    X: float
    xi: float
    envelope: np.ndarray

    @property
    def n(self) -> int:
        return self.envelope.size

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * (self.X / self.n)

    def values(self) -> np.ndarray:
        return np.exp(1j * self.xi * self.x) * self.envelope

    def derivative(self, order: int = 1) -> "BlochGrid":
        q = self.xi + 2.0 * np.pi / self.X * np.fft.fftfreq(self.n, 1.0 / self.n)
        return BlochGrid(self.X, self.xi, np.fft.ifft((1j * q) ** order * np.fft.fft(self.envelope)))


@dataclass
class _Envelopes:
    wave: WaveParams
    n: int
    x: np.ndarray
    U: list
    lam: complex
    h: tuple  # envelopes of u, u', u'' without the unimodular exponential
    phi: np.ndarray  # periodic part of the exponent
    xi_raw_grid: float


@lru_cache(maxsize=16)
def _wave_for(k: float) -> WaveParams:
    return selection.zero_mean_wave(k)


def _envelopes(bp: BandPoint, n: int) -> _Envelopes:
    w = _wave_for(bp.k)
    k, kap = w.k, w.kappa
    x = np.arange(n) * (w.X / n)
    U = [g.values for g in profile(w, n)]
    p = _p_values(k, kap, bp.band, bp.param, kap * x)
    if np.any(p == 0.0) or np.min(np.abs(p)) < 1e-300:
        raise ZeroDivisionError("p vanishes on the grid")
    d1, d2, d3 = U[1] / 3.0, U[2] / 3.0, U[3] / 3.0
    lam = bp.lambda0
    h0 = d1 - lam
    h1 = d2 - lam * h0 / p
    h1p = d3 - lam * (d2 * p - h0 * d1) / (p * p)
    h2 = h1p - lam * h1 / p
    inv = 1.0 / p
    m = np.mean(inv)
    q = 2.0 * np.pi / w.X * np.fft.fftfreq(n, 1.0 / n)
    f = np.fft.fft(-lam * (inv - m))
    f[0] = 0.0
    f[1:] /= 1j * q[1:]
    phi = np.fft.ifft(f)
    return _Envelopes(w, n, x, U, lam, (h0, h1, h2), phi, float((-lam * m).imag))


def eigenfunction_pair(bp: BandPoint, n: int | None = None) -> tuple[BlochGrid, BlochGrid, dict]:
    """(u_hat, v_hat) with v_hat(x) = int_x^{x+X} u_hat, plus residual diagnostics.

    v_hat is obtained from the Fourier coefficients of u_hat (exact quadrature of the
    trigonometric interpolant), so v_hat' = (exp(i xi X) - 1) u_hat.
    """
    if bp.lambda0 == 0:
        raise BandEdgeError("lam0 = 0: use the origin analysis")
    if n is None:
        n = _spike_n(bp.k, bp.band, bp.param)
    e = _envelopes(bp, n)
    X = e.wave.X
    shift = 2.0 * np.pi * bp.N / X
    # exp(i xi_raw x) = exp(i xi x) exp(i 2 pi N x / X); the second factor is periodic
    env = e.h[0] * np.exp(e.phi) * np.exp(1j * shift * e.x)
    u = BlochGrid(X, bp.xi, env)
    q = bp.xi + 2.0 * np.pi / X * np.fft.fftfreq(n, 1.0 / n)
    a = np.fft.fft(env)
    mult = np.exp(1j * q * X) - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        vhat = np.where(np.abs(q) > 0.0, a * mult / (1j * q), 0.0)
    v = BlochGrid(X, bp.xi, np.fft.ifft(vhat))
    U0, c0 = e.U[0], e.wave.c0
    res = u.derivative(3).envelope + BlochGrid(X, bp.xi, (U0 - c0) * env).derivative(1).envelope \
        + bp.lambda0 * env
    dv = v.derivative(1).envelope - (np.exp(1j * bp.xi * X) - 1.0) * env
    scale = np.linalg.norm(env)
    diag = {"ode_residual": float(np.linalg.norm(res) / scale),
            "v_identity": float(np.linalg.norm(dv) / scale),
            "n": n}
    return u, v, diag


@dataclass(frozen=True)
class SpectralSample:
    band: BandPoint
    lambda1: complex  # from the compatibility condition -<B u; v>/<u; v>
    re_rl1: float  # real part from the integrated-by-parts pairing ratio
    denominators: tuple[float, float]  # -<W> (= Im<u; W>/mu) and the normalized |<u; v>|
    valid: bool
    n: int
    # the compatibility route loses about eps/|normalized <u; v>| relative accuracy, so the
    # two routes are comparable to 1e-8 only when that pairing is not too small
    conditioned: bool = True


def _interp_periodic(f: np.ndarray, n: int) -> np.ndarray:
    """Trigonometric interpolation of real periodic samples onto n points."""
    m = f.size
    if n == m:
        return f
    F = np.fft.rfft(f)
    G = np.zeros(n // 2 + 1, dtype=complex)
    r = min(F.size, G.size)
    G[:r] = F[:r]
    if m % 2 == 0 and r == F.size:
        G[r - 1] *= 0.5 if n > m else 1.0
    return np.fft.irfft(G, n) * (n / m)


@lru_cache(maxsize=16)
def _U1_coeffs(k: float, n: int = 512) -> tuple[np.ndarray, np.ndarray]:
    cs = correctors(k, n, with_U2=False)
    return cs.U1, PeriodicGrid(cs.X, cs.U1).derivative(1).values


def lambda1(bp: BandPoint, n: int | None = None, den_tol: float = 1e-10) -> SpectralSample:
    """O(delta) corrector of the band eigenvalue lam0, by two independent routes.

    re_rl1  = Im<u' u - u'' u'> / Im<u W>, with W = -(u'' + (U0 - c0) u)/lam an
              antiderivative of u (integration by parts of the compatibility condition).
    lambda1 = -<(U1 u)' + u'' + u''''; v> / <u; v>, with v the Fourier antiderivative of u
              and u''', u'''' from the ODE.
    Pairings are <f; g> = mean(f conj(g)) over one period.

    In re_rl1 the factor lam = i mu is cancelled by hand. With d_j = p^(j) = U0^(j)/3,
    g = (d1^2 + mu^2)/p and the profile identity d3 + (U0 - c0) d1 = 0, W is real:
        W = 2 d2/p - g/p + U0 - c0,
        Im<u' u - u'' u'>/mu = -<g> + <(2 d2/p - g/p)(d2 - mu^2/p)> - <d3 d1/p>,
        Im<u W>/mu = -<W>.
    This keeps the ratio accurate when |lam0| is tiny (the upper band as X -> 30).
    """
    if n is None:
        n = _spike_n(bp.k, bp.band, bp.param)
    e = _envelopes(bp, n)
    h0, h1, h2 = e.h
    lam = e.lam
    mu = lam.imag
    Uc = e.U[0] - e.wave.c0
    kap = e.wave.kappa
    p = _p_values(e.wave.k, kap, bp.band, bp.param, kap * e.x)
    d1, d2, d3 = e.U[1] / 3.0, e.U[2] / 3.0, e.U[3] / 3.0
    g = (d1 * d1 + mu * mu) / p
    Wr = 2.0 * d2 / p - g / p + Uc
    num = -np.mean(g) + np.mean((2.0 * d2 / p - g / p) * (d2 - mu * mu / p)) - np.mean(d3 * d1 / p)
    den = -np.mean(Wr)
    valid = abs(den) > den_tol * np.sqrt(np.mean(Wr * Wr))
    re_a = num / den if valid else np.nan

    # second route: explicit quasi-periodic functions; the common Bloch factor cancels
    E = np.exp(e.phi)
    X = e.wave.X
    F0, F1, F2 = h0 * E, h1 * E, h2 * E
    dU = e.U[1]
    F4 = -e.U[2] * F0 - 2.0 * dU * F1 - Uc * F2 - lam * F1
    c1, dc1 = _U1_coeffs(bp.k)
    V1, dV1 = _interp_periodic(c1, n), _interp_periodic(dc1, n)
    BF = dV1 * F0 + V1 * F1 + F2 + F4
    q = e.xi_raw_grid + 2.0 * np.pi / X * np.fft.fftfreq(n, 1.0 / n)
    a = np.fft.fft(F0)
    small = np.abs(q) < 1e-9 * (2.0 * np.pi / X)
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = np.where(small, 0.0, a / (1j * q))
    A = np.fft.ifft(ah)
    if np.any(small):
        A = A + np.mean(Wr * E) - np.mean(A)
    d = np.mean(F0 * np.conj(A))
    cond = abs(d) / np.sqrt(np.mean(np.abs(F0) ** 2) * np.mean(np.abs(A) ** 2))
    lam1 = complex(-np.mean(BF * np.conj(A)) / d) if valid else complex(np.nan, np.nan)
    return SpectralSample(bp, lam1, float(re_a), (float(den), float(cond)), bool(valid), n,
                          bool(cond >= COND_MIN))


def lambda1_origin(k: float, n: int = 512) -> float:
    """Rate of the eigenvalue leaving the origin at xi = 0 (see perturbed_profile)."""
    return _lambda1_origin_cs(correctors(k, n, with_U2=False))


@dataclass(frozen=True)
class StabilityIndex:
    X: float
    ind: float
    argmax_eta: float
    origin_lambda1: float
    argmax_band: str = ""
    n_samples: int = 0
    n_invalid: int = 0
    max_form_gap: float = 0.0  # over conditioned samples, relative to max(1, |lam1|)
    max_abs_im: float = 0.0
    n_unconditioned: int = 0
    max_form_gap_unconditioned: float = 0.0
    samples: tuple = field(default=(), repr=False)


def _sample_params(k: float, resolution: int) -> list[tuple[str, float]]:
    kc2 = _kc2(k)
    out = []
    # upper band, uniform in eta plus geometric clustering toward both edges
    r = EDGE_EXCLUSION
    s = np.linspace(r, 1.0 - r, resolution)
    edge = np.geomspace(1e-2, r, max(resolution // 10, 8))
    s = np.unique(np.concatenate([s, edge, 1.0 - edge]))
    out += [("upper", float(v)) for v in s]
    # lower band: eta in [eta1 - 50, eta1], clustered toward eta1, then a tan tail
    t_min = r * max(kc2, 1.0)
    t = np.concatenate([np.linspace(t_min, 50.0, resolution),
                        np.geomspace(t_min, 1.0, max(resolution // 4, 8))])
    theta = np.linspace(np.arctan(50.0), np.arctan(2000.0), 12)[1:]
    t = np.unique(np.concatenate([t, np.tan(theta)]))
    out += [("lower", float(v)) for v in t]
    return out


def _eval_param(k: float, band: str, param: float) -> SpectralSample:
    return lambda1(band_point_from_param(k, band, param))


def stability_index(X: float, band_resolution: int = 400, refine: bool = True,
                    invalid_fraction: float = 0.05, keep_samples: bool = False,
                    executor=None) -> StabilityIndex:
    """Ind(X) = max of Re lam1 over the sampled bands and the origin rate."""
    k = selection.modulus_from_period(X)
    params = _sample_params(k, band_resolution)
    if executor is None:
        samples = [_eval_param(k, b, p) for b, p in params]
    else:
        samples = list(executor.map(_eval_param, [k] * len(params), *zip(*params)))
    valid = [s for s in samples if s.valid]
    n_invalid = len(samples) - len(valid)
    if n_invalid > invalid_fraction * len(samples):
        raise ResolutionError(f"{n_invalid} of {len(samples)} samples invalid")
    if n_invalid:
        warnings.warn(f"{n_invalid} band samples excluded: small pairing denominator")
    vals = np.array([s.re_rl1 for s in valid])
    j = int(np.argmax(vals))
    best, best_s = float(vals[j]), valid[j]
    if refine:
        band = best_s.band.band
        ps = np.array([s.band.param for s in valid if s.band.band == band])
        i = int(np.searchsorted(ps, best_s.band.param))
        lo = ps[max(i - 1, 0)]
        hi = ps[min(i + 1, ps.size - 1)]
        if hi > lo:
            res = minimize_scalar(lambda v: -lambda1(band_point_from_param(k, band, v)).re_rl1,
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * max(1.0, hi)})
            if -res.fun > best:
                best_s = lambda1(band_point_from_param(k, band, float(res.x)))
                best = best_s.re_rl1
    org = lambda1_origin(k)
    def rel_gap(s):
        return abs(s.lambda1.real - s.re_rl1) / max(1.0, abs(s.re_rl1))

    cond = [s for s in valid if s.conditioned]
    uncond = [s for s in valid if not s.conditioned]
    gap = max((rel_gap(s) for s in cond), default=0.0)
    gap_u = max((rel_gap(s) for s in uncond), default=0.0)
    im = max(abs(s.lambda1.imag) / max(1.0, abs(s.re_rl1)) for s in cond)
    if org > best:
        ind, eta, band = org, float("nan"), "origin"
    else:
        ind, eta, band = best, best_s.band.eta, best_s.band.band
    return StabilityIndex(float(X), float(ind), eta, float(org), band, len(samples), n_invalid,
                          float(gap), float(im), len(uncond), float(gap_u),
                          tuple(samples) if keep_samples else ())


def find_boundaries(lower=(2.0 * np.pi + 0.1, 12.0), upper=(20.0, 30.0), xtol: float = 1e-3,
                    band_resolution: int = 400, executor=None) -> tuple[float, float]:
    """Sign changes of Ind on the two brackets, to |dX| <= xtol."""
    def ind(X):
        return stability_index(X, band_resolution, executor=executor).ind

    out = []
    for a, b in (lower, upper):
        fa, fb = ind(a), ind(b)
        if fa * fb > 0.0:
            raise ArithmeticError(f"Ind has no sign change on [{a}, {b}]")
        out.append(float(brentq(ind, a, b, xtol=xtol)))
    return out[0], out[1]
