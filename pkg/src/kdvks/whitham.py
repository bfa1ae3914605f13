"""Characteristic velocities of the KdV Whitham system, the relaxed (selected-wave)
modulation system, the homogeneous relaxation rate and the subcharacteristic verdicts.

Conventions: k is the modulus of the selected wave, kappa its canonical scale
(U0 = u0 + 12 k^2 kappa^2 cn^2(kappa x)), G(k) = 2 pi / X the physical wavenumber.
The Riemann-invariant spread is w3 - w1 = (u3 - u1)/2 = 6 kappa^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.optimize import brentq

from . import selection
from .cnoidal import WaveParams, profile
from .elliptic import complementary, complete_elliptic, elliptic_derivatives, jacobi_sn_cn_dn

# below this modulus b1 and b2 come from series in m = k^2 (both tend to -2 at k = 0)
_B_SERIES_K = 0.05
_N_SERIES = 12


class QuadraticDegeneracyError(ArithmeticError):
    pass


def _KE_series() -> tuple[np.ndarray, np.ndarray]:
    # K = pi/2 sum t_n m^n, E = pi/2 sum -t_n m^n/(2n-1), t_n = (binom(2n,n)/4^n)^2
    t = np.array([(comb(2 * n, n) / 4.0**n) ** 2 for n in range(_N_SERIES + 2)])
    n = np.arange(t.size)
    return 0.5 * np.pi * t, -0.5 * np.pi * t / (2 * n - 1)


def _b12_series(m: float) -> tuple[float, float]:
    Ks, Es = _KE_series()
    # (E - K)/m and ((1-m) K - E)/m, both with vanishing constant terms removed
    emk = np.polynomial.polynomial.polyval(m, (Es - Ks)[1:])
    kmK = np.concatenate(([Ks[0]], Ks[1:] - Ks[:-1]))
    kce = np.polynomial.polynomial.polyval(m, (kmK - Es)[1:])
    K = np.polynomial.polynomial.polyval(m, Ks)
    return K / emk, (1.0 - m) * K / kce


def b_coefficients(k: float) -> tuple[float, float, float]:
    """b1, b2, b3 of the KdV characteristic velocities V_i = c + (2 Delta/3) b_i."""
    k = float(k)
    if not 0.0 <= k < 1.0:
        raise ValueError("modulus must lie in [0, 1)")
    ke = complete_elliptic(k)
    kc2 = (1.0 - k) * (1.0 + k)
    b3 = kc2 * ke.K / ke.E
    if k < _B_SERIES_K:
        b1, b2 = _b12_series(k * k)
    else:
        b1 = k * k * ke.K / (ke.E - ke.K)
        b2 = k * k * kc2 * ke.K / (kc2 * ke.K - ke.E)
    return float(b1), float(b2), float(b3)


def kdv_char_velocities(k: float, Delta: float, c: float) -> tuple[float, float, float]:
    """Sorted characteristic velocities c + (2 Delta/3) b_i(k); Delta = w3 - w1 > 0."""
    if not Delta > 0.0:
        raise ValueError("Delta must be positive")
    v = np.sort(c + (2.0 * Delta / 3.0) * np.array(b_coefficients(k)))
    return float(v[0]), float(v[1]), float(v[2])


def _gauge_u0(k: float, kap2: float) -> float:
    ke = complete_elliptic(k)
    return -12.0 * kap2 * (ke.E / ke.K - 1.0 + k * k)


def kdv_velocities_selected(k: float, u0: float | None = None) -> tuple[float, float, float]:
    """alpha_1 < alpha_2 < alpha_3 for the selected wave of modulus k (zero-mean gauge by default)."""
    w = selection.zero_mean_wave(k) if u0 is None else selection.selected_wave(k, u0)
    return kdv_char_velocities(k, 6.0 * w.kappa**2, w.c0)


@dataclass(frozen=True)
class RelaxedState:
    """G, M, c, a and their partial derivatives along the selected family, variables (k, u0)."""
    G: float
    dG: float
    M: float
    dM: float
    c: float
    dc: float
    a: float
    da: float


def relaxed_state(k: float, u0: float | None = None) -> RelaxedState:
    k = float(k)
    kap2 = float(selection.kappa_squared(k))
    dkap2 = float(selection.kappa_squared_derivative(k))
    if u0 is None:
        u0 = _gauge_u0(k, kap2)
    ke = complete_elliptic(k)
    dK, dE = elliptic_derivatives(k)
    r = ke.E / ke.K
    dr = (dE * ke.K - ke.E * dK) / ke.K**2
    k2 = k * k
    u1 = u0 + 12.0 * kap2 * (k2 - 1.0)
    u3 = u0 + 12.0 * kap2 * k2
    du1 = 12.0 * dkap2 * (k2 - 1.0) + 24.0 * kap2 * k
    du3 = 12.0 * dkap2 * k2 + 24.0 * kap2 * k
    u2, du2 = u0, 0.0
    c = (u1 + u2 + u3) / 3.0
    dc = (du1 + du2 + du3) / 3.0
    a = -(u1 * u2 + u1 * u3 + u2 * u3) / 6.0
    da = -(du1 * (u2 + u3) + du2 * (u1 + u3) + du3 * (u1 + u2)) / 6.0
    M = u0 + 12.0 * kap2 * (k2 - 1.0 + r)
    dM = 12.0 * dkap2 * (k2 - 1.0 + r) + 12.0 * kap2 * (2.0 * k + dr)
    return RelaxedState(float(selection.selection_kappa(k)), float(selection.selection_kappa_derivative(k)),
                        M, dM, c, dc, a, da)


def relaxed_quadratic(k: float, u0: float | None = None) -> tuple[float, float, float]:
    """(A, B, C) with A b^2 - B b + C = 0 for the relaxed characteristic velocities.

    The relaxed system is G_t + (G c)_x = 0, M_t + (c M + a)_x = 0 on the selected
    family. In the variables (k, u0): M_u0 = c_u0 = 1 and a_u0 = -c, so the flux N = cM + a
    has N_u0 = M, and the characteristic equation det(dF - b dU) = 0 reads as below.
    """
    s = relaxed_state(k, u0)
    f11 = s.dG * s.c + s.G * s.dc
    dN = s.dc * s.M + s.c * s.dM + s.da
    A = s.dG
    B = f11 + s.dG * s.M - s.G * s.dM
    C = f11 * s.M - s.G * dN
    return A, B, C


@dataclass(frozen=True)
class RelaxedVelocities:
    betas: tuple[complex, complex]
    real: bool
    discriminant: float


def _solve_quadratic(A: float, B: float, C: float, tol: float = 1e-14) -> RelaxedVelocities:
    if abs(A) <= tol * max(abs(B), abs(C), 1.0):
        raise QuadraticDegeneracyError("leading coefficient vanishes: relaxed quadratic degenerates")
    disc = B * B - 4.0 * A * C
    if disc >= 0.0:
        sq = np.sqrt(disc)
        # cancellation-free pair
        q = 0.5 * (B + np.copysign(sq, B))
        r = np.sort([q / A, C / q] if q != 0.0 else [0.0, 0.0])
        return RelaxedVelocities((complex(r[0]), complex(r[1])), True, float(disc))
    re = B / (2.0 * A)
    im = np.sqrt(-disc) / (2.0 * abs(A))
    return RelaxedVelocities((complex(re, -im), complex(re, im)), False, float(disc))


def relaxed_char_velocities(k: float, u0: float | None = None) -> RelaxedVelocities:
    """beta_1, beta_2 from the relaxed quadratic with analytic k-derivatives."""
    return _solve_quadratic(*relaxed_quadratic(k, u0))


def alternative_relaxed_quadratic(k: float) -> tuple[float, float, float]:
    """An alternative coefficient set, kept for diagnostics only.

    Delta = (3/2)(K G / 2 pi)^2. These do not reproduce the Jacobian eigenvalues
    of the relaxed system; nothing else uses them.
    """
    def Delta(kk):
        return 1.5 * (complete_elliptic(kk).K * float(selection.selection_kappa(kk)) / (2.0 * np.pi)) ** 2

    def f(kk):
        ke = complete_elliptic(kk)
        return (kk * kk - 1.0 - (kk * kk + 1.0) / 3.0 + 4.0 * ke.E / ke.K) * Delta(kk)

    h = 1e-6 * min(k, 1.0 - k)
    G = float(selection.selection_kappa(k))
    dG = float(selection.selection_kappa_derivative(k))
    D = Delta(k)
    dD = (Delta(k + h) - Delta(k - h)) / (2.0 * h)
    df = (f(k + h) - f(k - h)) / (2.0 * h)
    A = dG
    B = dG * f(k) - G * df
    C = -2.0 * G * D * (2.0 * k * k - 1.0) / 9.0 * (2.0 * k * D + (k * k + 1.0) * dD)
    return A, B, C


def _flux_state(k: float, u0: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    kap = float(selection.canonical_kappa(k))
    w = WaveParams(k, kap, u0)
    U = profile(w, n)[0].values
    G = np.pi * kap / w.K
    return np.array([G, np.mean(U)]), np.array([G * w.c0, np.mean(0.5 * U * U)])


def relaxed_jacobian_fd(k: float, u0: float | None = None, n: int = 4096,
                        h: float | None = None) -> np.ndarray:
    """Eigenvalues of dF/dU for the relaxed system by central differences with one
    Richardson step, with <U> and the mass flux <U^2/2> taken by quadrature."""
    k = float(k)
    if u0 is None:
        u0 = _gauge_u0(k, float(selection.kappa_squared(k)))
    if h is None:
        h = 1e-4 * min(k, 1.0 - k)

    def jac(step_k, step_u):
        Jc = np.zeros((2, 2))
        Jf = np.zeros((2, 2))
        for j, (dk, du) in enumerate(((step_k, 0.0), (0.0, step_u))):
            cp, fp = _flux_state(k + dk, u0 + du, n)
            cm, fm = _flux_state(k - dk, u0 - du, n)
            s = dk + du
            Jc[:, j] = (cp - cm) / (2.0 * s)
            Jf[:, j] = (fp - fm) / (2.0 * s)
        return Jc, Jf

    hu = 1e-3
    Jc1, Jf1 = jac(h, hu)
    Jc2, Jf2 = jac(h / 2, hu / 2)
    Jc = (4.0 * Jc2 - Jc1) / 3.0
    Jf = (4.0 * Jf2 - Jf1) / 3.0
    ev = np.linalg.eigvals(Jf @ np.linalg.inv(Jc))
    return ev[np.lexsort((ev.imag, ev.real))]


def P_coefficient(k, variant: str = "derived") -> np.ndarray:
    """P(k) in <u^2/2> = M^2/2 - P Delta^2/6 with Delta = u3 - u1.

    "derived" equals -3 k^4 Var(cn^2); "alternative" is the coefficient set
    1 - k^2 + 4(k^2-2)E/K + 12(E/K)^2, which does not match the variance.
    """
    k = np.asarray(k, dtype=float)
    ke = complete_elliptic(k)
    r = ke.E / ke.K
    if variant == "derived":
        return 1.0 - k * k + 2.0 * (k * k - 2.0) * r + 3.0 * r * r
    if variant == "alternative":
        return 1.0 - k * k + 4.0 * (k * k - 2.0) * r + 12.0 * r * r
    raise ValueError("variant must be 'derived' or 'alternative'")


def P_derivative(k, variant: str = "derived") -> np.ndarray:
    k = np.asarray(k, dtype=float)
    ke = complete_elliptic(k)
    dK, dE = elliptic_derivatives(k)
    r = ke.E / ke.K
    dr = (dE * ke.K - ke.E * dK) / ke.K**2
    if variant == "derived":
        return -2.0 * k + 4.0 * k * r + 2.0 * (k * k - 2.0) * dr + 6.0 * r * dr
    if variant == "alternative":
        return -2.0 * k + 8.0 * k * r + 4.0 * (k * k - 2.0) * dr + 24.0 * r * dr
    raise ValueError("variant must be 'derived' or 'alternative'")


def P_quadrature(k: float, n: int = 4096) -> float:
    """-3 k^4 Var(cn^2) over a period, the oracle for P."""
    K = complete_elliptic(k).K
    _, cn, _ = jacobi_sn_cn_dn(np.arange(n) * (2.0 * K / n), k)
    c2 = cn * cn
    return float(-3.0 * k**4 * (np.mean(c2 * c2) - np.mean(c2) ** 2))


def homogeneous_relaxation_rate(k: float, kprime: str = "derivative", P: str = "derived") -> float:
    """lambda_* = Lambda_*/r for spatially homogeneous modulations about Delta = Delta_bar(k).

    kprime selects the meaning of K' (dK/dk or the complementary integral K(k_c)).
    """
    k = float(k)
    ke = complete_elliptic(k)
    if kprime == "derivative":
        Kp, _ = elliptic_derivatives(k)
    elif kprime == "complementary":
        Kp = complete_elliptic(float(complementary(k))).K
    else:
        raise ValueError("kprime must be 'derivative' or 'complementary'")
    D = float(selection.delta_bar(k))
    dD = 3.0 * float(selection.kappa_squared_derivative(k))
    coef = (float(P_coefficient(k, P)) * Kp / (3.0 * ke.K) + float(P_derivative(k, P)) / 12.0) * D * D
    rhs = D * Kp / ke.K - 0.5 * dD
    if abs(coef) <= 1e-14 * max(abs(rhs), 1.0):
        raise ZeroDivisionError("coefficient of Lambda_* vanishes")
    return float(rhs / coef)


@dataclass(frozen=True)
class SubcharReport:
    X: float
    k: float
    alphas: tuple[float, float, float]
    betas: tuple[complex, complex]
    lambda_star: float
    s1: bool
    s2: bool
    s3: bool
    margins: tuple[float, float, float]


def interlacing_margin(alphas, rv: RelaxedVelocities) -> float:
    """Signed (S2) margin: min gap of a1 < b1 < a2 < b2 < a3, or -max|Im b| if complex."""
    if not rv.real:
        return -max(abs(b.imag) for b in rv.betas)
    a1, a2, a3 = alphas
    b1, b2 = (b.real for b in rv.betas)
    return float(min(b1 - a1, a2 - b1, b2 - a2, a3 - b2))


def _report_k(k: float, X: float, u0: float | None = None) -> SubcharReport:
    alphas = kdv_velocities_selected(k, u0)
    rv = relaxed_char_velocities(k, u0)
    lam = homogeneous_relaxation_rate(k)
    m1 = float(rv.betas[1].real - rv.betas[0].real) if rv.real else -max(abs(b.imag) for b in rv.betas)
    m2 = interlacing_margin(alphas, rv)
    m3 = -lam
    return SubcharReport(X, k, alphas, rv.betas, lam, m1 > 0.0, m2 > 0.0, m3 > 0.0, (m1, m2, m3))


def subchar_report(X: float, u0: float | None = None) -> SubcharReport:
    """(S1)-(S3) for the selected wave of period X; zero-mean gauge unless u0 is given."""
    k = selection.modulus_from_period(X)
    return _report_k(k, float(X), u0)


def s2_margin(X: float) -> float:
    return subchar_report(X).margins[1]


def critical_period(lo: float = 2.0 * np.pi, hi: float = 10.0, xtol: float = 1e-8) -> float:
    """X_c where the (S2) margin changes sign, by bracketing on [lo, hi]."""
    lo = max(lo, float(selection.period(1e-3)))
    f_lo, f_hi = s2_margin(lo), s2_margin(hi)
    if f_lo * f_hi > 0.0:
        raise ArithmeticError("the interlacing margin does not change sign on the bracket")
    return float(brentq(s2_margin, lo, hi, xtol=xtol))
