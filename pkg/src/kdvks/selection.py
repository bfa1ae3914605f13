"""Wave selection in the small-dissipation limit and the period <-> modulus map.

Two wavenumber scales appear here:
  kappa   the canonical scale of cnoidal.WaveParams, U0 = u0 + 12 k^2 kappa^2 cn^2(kappa x)
  G(k)    the physical wavenumber 2 pi / X of the selected wave
They are related by kappa = K(k) G(k) / pi, i.e. X = 2 pi / G = 2 K / kappa.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .cnoidal import K_MAX, K_MIN, DegenerateWaveError, WaveParams, check_modulus
from .elliptic import complete_elliptic, elliptic_derivatives, jacobi_sn_cn_dn

X_GUARD = (2.0 * np.pi - 0.01, 10.0 * np.pi + 0.5)


class PeriodRangeError(ValueError):
    pass


def _ratio_parts(k, K, E):
    k2 = k * k
    num = 2.0 * (k2 * k2 - k2 + 1.0) * E - (1.0 - k2) * (2.0 - k2) * K
    den = (-2.0 + 3.0 * k2 + 3.0 * k2**2 - 2.0 * k2**3) * E + (k2**3 + k2**2 - 4.0 * k2 + 2.0) * K
    return num, den


# Taylor coefficients in m = k^2 of (7/20) num/den; the closed form loses
# about 8 digits to cancellation below k ~ 1e-2
_SERIES = (0.25, 0.125, 0.0390625, -0.00390625, -0.01788330078125, -0.017364501953125,
           -0.012026071548461914, -0.006706118583679199, -0.003034636378288269,
           -0.0010375604033470154, -0.0001958119828486815, 2.5179855583701283e-05,
           -5.455570146750688e-06, -9.067059752965179e-05, -0.0001523542345224227,
           -0.0001756566708222551, -0.00017047507345243317)
_SERIES_K = 0.2


def kappa_squared(k) -> np.ndarray:
    """(K G / pi)^2 = (7/20) num/den, the canonical selected kappa^2."""
    k = np.asarray(k, dtype=float)
    ke = complete_elliptic(k)
    num, den = _ratio_parts(k, ke.K, ke.E)
    if np.any((np.abs(den) < 1e-300) & (k >= _SERIES_K)):
        raise ZeroDivisionError("selection ratio has a vanishing denominator")
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.35 * num / den
    m = k * k
    ser = np.polynomial.polynomial.polyval(m, _SERIES)
    return np.where(k < _SERIES_K, ser, val)


def canonical_kappa(k) -> np.ndarray:
    return np.sqrt(kappa_squared(k))


def selection_kappa(k) -> np.ndarray:
    """G(k), the wavenumber 2 pi / X of the selected wave."""
    k = np.asarray(k, dtype=float)
    return np.pi * canonical_kappa(k) / complete_elliptic(k).K


def period(k) -> np.ndarray:
    """X(k) = 2 pi / G(k) = 2 K(k) / kappa(k)."""
    return 2.0 * np.pi / selection_kappa(k)


def selected_wave(k: float, u0: float = 0.0) -> WaveParams:
    k = check_modulus(k)
    return WaveParams(k, float(canonical_kappa(k)), u0)


def zero_mean_wave(k: float) -> WaveParams:
    """Selected wave in the gauge <U0> = 0."""
    k = check_modulus(k)
    kap = float(canonical_kappa(k))
    ke = complete_elliptic(k)
    u0 = -12.0 * kap**2 * (ke.E / ke.K - 1.0 + k * k)
    return WaveParams(k, kap, u0)


def f_squared_quadrature(k: float, n: int = 512) -> float:
    """<[(cn^2)']^2> / <[(cn^2)'']^2> over one period in z, by the trapezoid rule."""
    K = complete_elliptic(k).K
    z = np.arange(n) * (2.0 * K / n)
    sn, cn, dn = jacobi_sn_cn_dn(z, k)
    d1 = -2.0 * sn * cn * dn
    d2 = -2.0 * (cn * cn * dn * dn - sn * sn * dn * dn - k * k * sn * sn * cn * cn)
    return float(np.sum(d1 * d1) / np.sum(d2 * d2))


def selection_residual(k: float, kappa: float, n: int = 512) -> float:
    """kappa^2 - F^2(k) with F^2 by quadrature; kappa is the canonical scale."""
    return kappa * kappa - f_squared_quadrature(k, n)


def delta_bar(k) -> np.ndarray:
    """(21/20) num/den, equal to 3 (K G / pi)^2."""
    return 3.0 * kappa_squared(k)


def kappa_squared_derivative(k) -> np.ndarray:
    """d(kappa^2)/dk from the analytic derivatives of K and E."""
    k = np.asarray(k, dtype=float)
    ke = complete_elliptic(k)
    dK, dE = elliptic_derivatives(k)
    k2 = k * k
    num, den = _ratio_parts(k, ke.K, ke.E)
    dnum = (2.0 * (4.0 * k2 * k - 2.0 * k) * ke.E + 2.0 * (k2 * k2 - k2 + 1.0) * dE
            - (-2.0 * k * (2.0 - k2) - 2.0 * k * (1.0 - k2)) * ke.K - (1.0 - k2) * (2.0 - k2) * dK)
    dden = ((6.0 * k + 12.0 * k2 * k - 12.0 * k2 * k2 * k) * ke.E
            + (-2.0 + 3.0 * k2 + 3.0 * k2**2 - 2.0 * k2**3) * dE
            + (6.0 * k2**2 * k + 4.0 * k2 * k - 8.0 * k) * ke.K
            + (k2**3 + k2**2 - 4.0 * k2 + 2.0) * dK)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.35 * (dnum * den - num * dden) / den**2
    dser = 2.0 * k * np.polynomial.polynomial.polyval(k * k, np.polynomial.polynomial.polyder(_SERIES))
    return np.where(k < _SERIES_K, dser, val)


def selection_kappa_derivative(k) -> np.ndarray:
    """dG/dk."""
    k = np.asarray(k, dtype=float)
    ke = complete_elliptic(k)
    dK, _ = elliptic_derivatives(k)
    kap = canonical_kappa(k)
    dkap = kappa_squared_derivative(k) / (2.0 * kap)
    return np.pi * (dkap * ke.K - kap * dK) / ke.K**2


@lru_cache(maxsize=1)
def _monotone_table(n: int = 200) -> tuple[np.ndarray, np.ndarray]:
    # grid clustered toward k = 1 where X grows logarithmically in 1 - k
    s = np.linspace(0.0, 1.0, n)
    k = K_MIN + (K_MAX - K_MIN) * (1.0 - (1.0 - s) ** 6)
    X = period(k)
    if not np.all(np.diff(X) > 0.0):
        raise ArithmeticError("X(k) is not monotone on the admissible range")
    return k, X


def modulus_from_period(X: float, tol: float = 1e-10) -> float:
    """k with X(k) = X, by bracketing on a verified monotone table then Brent's method."""
    X = float(X)
    lo, hi = X_GUARD
    ks, Xs = _monotone_table()
    if not (lo <= X <= hi) or X < Xs[0] or X > Xs[-1]:
        raise PeriodRangeError(
            f"period {X!r} outside attainable range [{max(lo, Xs[0]):.6g}, {min(hi, Xs[-1]):.6g}]")
    j = int(np.searchsorted(Xs, X))
    if Xs[j] == X:
        return float(ks[j])
    a, b = ks[max(j - 1, 0)], ks[j]
    k = brentq(lambda kk: float(period(kk)) - X, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    # polish over neighbouring floats; matters only close to k = 1
    cand = k + np.spacing(k) * np.arange(-16, 17)
    cand = cand[(cand >= K_MIN) & (cand <= K_MAX)]
    k = float(cand[np.argmin(np.abs(period(cand) - X))])
    # near k = 1 the spacing of floats in k limits how well X can be matched
    resolution = 4.0 * abs(float(period(min(np.nextafter(k, 1.0), K_MAX))) - float(period(k)))
    if abs(float(period(k)) - X) > max(tol * max(1.0, X), resolution):
        raise ArithmeticError("period inversion did not converge")
    return float(k)


@dataclass(frozen=True)
class SelectedWave:
    k: float
    kappa_sel: float
    X: float
    residual: float


def select(X: float) -> SelectedWave:
    k = modulus_from_period(X)
    return SelectedWave(k, float(selection_kappa(k)), float(period(k)),
                        float(selection_residual(k, float(canonical_kappa(k)))))
