"""Complete elliptic integrals, Jacobi elliptic functions, theta and Weierstrass functions.

Everything is vectorized over numpy arrays and pure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_AGM_TOL = 1e-16
_AGM_MAX_ITER = 64
_EPS = np.finfo(float).eps
# below this complementary modulus K and E come from their logarithmic expansions
_KC_LOG_SWITCH = 1e-7


class EllipticDomainError(ValueError):
    """Raised when a modulus lies outside the domain of a routine."""


def _as_modulus(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k)) or np.any(k < 0.0) or np.any(k >= 1.0):
        raise EllipticDomainError("elliptic modulus must satisfy 0 <= k < 1")
    return k


def complementary(k) -> np.ndarray:
    """k_c = sqrt(1 - k^2), computed without cancellation near k = 1."""
    k = np.asarray(k, dtype=float)
    return np.sqrt((1.0 - k) * (1.0 + k))


@dataclass(frozen=True)
class EllipticPair:
    K: float | np.ndarray
    E: float | np.ndarray


def _agm_KE(kc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.ones_like(kc)
    b = kc.copy()
    c2 = 1.0 - kc * kc  # c_0^2 = k^2
    s = 0.5 * c2
    p = 0.5
    for _ in range(_AGM_MAX_ITER):
        an = 0.5 * (a + b)
        cn = 0.5 * (a - b)
        b = np.sqrt(a * b)
        a = an
        p *= 2.0
        s = s + p * cn * cn
        if np.all(np.abs(cn) <= _AGM_TOL * a):
            break
    K = np.pi / (2.0 * a)
    return K, K * (1.0 - s)


def complete_elliptic(k) -> EllipticPair:
    """K(k) and E(k) by the arithmetic-geometric mean.

    Near k = 1 (k_c < 1e-7) the logarithmic expansions in k_c are used instead.
    """
    k = _as_modulus(k)
    kc = complementary(k)
    K, E = _agm_KE(np.atleast_1d(kc).astype(float))
    kcv = np.atleast_1d(kc)
    near = kcv < _KC_LOG_SWITCH
    if np.any(near):
        kk = kcv[near]
        L = np.log(4.0 / kk)
        K[near] = L + 0.25 * kk**2 * (L - 1.0)
        E[near] = 1.0 + 0.5 * kk**2 * (L - 0.5)
    if np.ndim(k) == 0:
        return EllipticPair(float(K[0]), float(E[0]))
    return EllipticPair(K.reshape(k.shape), E.reshape(k.shape))


def elliptic_derivatives(k) -> tuple:
    """(dK/dk, dE/dk) from the classical identities; k = 0 is rejected."""
    k = _as_modulus(k)
    if np.any(k == 0.0):
        raise EllipticDomainError("derivative identities are 0/0 at k = 0")
    kc2 = (1.0 - k) * (1.0 + k)
    ke = complete_elliptic(k)
    dK = (ke.E - kc2 * ke.K) / (k * kc2)
    dE = (ke.E - ke.K) / k
    return dK, dE


def _landen_phases(u, k: float) -> tuple[list, list]:
    """Amplitudes phi_0 = am(u), ..., phi_n of the descending Landen scheme, and the c_j."""
    a = [1.0]
    c = [k]
    b = complementary(k)
    while abs(c[-1]) > _EPS * a[-1] and len(a) < _AGM_MAX_ITER:
        an = 0.5 * (a[-1] + b)
        c.append(0.5 * (a[-1] - b))
        b = np.sqrt(a[-1] * b)
        a.append(an)
    n = len(a) - 1
    phi = (2.0**n) * a[n] * u
    phis = [phi]
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))
        phis.append(phi)
    return phis[::-1], c


def jacobi_sn_cn_dn(u, k) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sn, cn, dn by descending Landen transformation (AGM form)."""
    k = float(_as_modulus(k))
    u = np.asarray(u, dtype=float)
    if k == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    phis, _ = _landen_phases(u, k)
    sn = np.sin(phis[0])
    cn = np.cos(phis[0])
    # both terms nonnegative: no cancellation when k -> 1 and cn -> 0
    kc = complementary(k)
    dn = np.sqrt(kc * kc + k * k * cn * cn)
    return sn, cn, dn


def jacobi_zeta(u, k) -> np.ndarray:
    """Jacobi zeta Z(u) = E(am u) - (E/K) u, as sum_j c_j sin(phi_j) over the Landen phases."""
    k = float(_as_modulus(k))
    u = np.asarray(u, dtype=float)
    if k == 0.0:
        return np.zeros_like(u)
    phis, c = _landen_phases(u, k)
    return sum(c[j] * np.sin(phis[j]) for j in range(1, len(phis)))


def nome(k) -> float:
    """q0 = exp(-pi K(k_c) / K(k))."""
    k = float(_as_modulus(k))
    if k == 0.0:
        return 0.0
    K = complete_elliptic(k).K
    Kp = complete_elliptic(complementary(k)).K
    return float(np.exp(-np.pi * Kp / K))


def theta_n_terms(q0: float, tol: float = 1e-17) -> int:
    """Number of series terms whose tail is below tol."""
    if not 0.0 <= q0 < 1.0:
        raise EllipticDomainError("theta series needs a nome in [0, 1)")
    if q0 == 0.0:
        return 1
    # q0^((2n-1)^2/4) < tol
    n = 0.5 * (np.sqrt(4.0 * np.log(tol) / np.log(q0)) + 1.0)
    return int(np.ceil(n)) + 1


def theta_functions(z, k, n_terms: int | None = None, deriv: int = 0):
    """Theta(z), Theta1(z) (Jacobi's H and H1) on the argument scale pi z / 2K.

    Theta(z)  = 2 sum (-1)^(n+1) q0^((2n-1)^2/4) sin((2n-1) pi z / 2K)
    Theta1(z) = 2 sum          q0^((2n-1)^2/4) cos((2n-1) pi z / 2K)

    With deriv = m the m-th z-derivative of each is returned instead.
    Complex z is accepted.
    """
    k = float(_as_modulus(k))
    if k == 0.0:
        raise EllipticDomainError("theta series degenerate at k = 0")
    K = complete_elliptic(k).K
    q0 = nome(k)
    if n_terms is None:
        n_terms = theta_n_terms(q0)
    z = np.asarray(z)
    n = np.arange(1, n_terms + 1)
    odd = 2 * n - 1
    w = odd * np.pi / (2.0 * K)
    amp = 2.0 * q0 ** (odd**2 / 4.0)
    sgn = (-1.0) ** (n + 1)
    arg = np.multiply.outer(z, w)
    # d^m/dz^m sin(wz) = w^m sin(wz + m pi/2)
    shift = deriv * np.pi / 2.0
    th = np.sum(sgn * amp * w**deriv * np.sin(arg + shift), axis=-1)
    th1 = np.sum(amp * w**deriv * np.cos(arg + shift), axis=-1)
    return th, th1


@dataclass(frozen=True)
class WeierstrassData:
    """Rectangular lattice with real half-period omega and imaginary half-period i*omega_prime."""
    k: float
    omega: float
    omega_prime: float
    q0: float
    e1: float
    lambda_w: float
    eta: float  # zeta(omega)

    @property
    def e2(self) -> float:
        return self.lambda_w * (2.0 * self.k**2 - 1.0) / 3.0

    @property
    def e3(self) -> float:
        return -self.lambda_w * (1.0 + self.k**2) / 3.0

    @property
    def invariants(self) -> tuple[float, float]:
        """(g2, g3) from the roots e1, e2, e3."""
        e1, e2, e3 = self.e1, self.e2, self.e3
        g2 = -4.0 * (e1 * e2 + e1 * e3 + e2 * e3)
        g3 = 4.0 * e1 * e2 * e3
        return g2, g3


def weierstrass_data(k, omega: float) -> WeierstrassData:
    """Lattice data for modulus k and real half-period omega.

    lambda_w = e1 - e3 = (K/omega)^2 and omega_prime = omega K(k_c)/K(k).
    """
    k = float(_as_modulus(k))
    if k == 0.0:
        raise EllipticDomainError("degenerate lattice at k = 0")
    ke = complete_elliptic(k)
    Kp = complete_elliptic(complementary(k)).K
    lam = (ke.K / omega) ** 2
    e1 = lam * (2.0 - k * k) / 3.0
    eta = np.sqrt(lam) * (ke.E - ke.K * (2.0 - k * k) / 3.0)
    return WeierstrassData(k=k, omega=float(omega), omega_prime=float(omega * Kp / ke.K),
                           q0=nome(k), e1=float(e1), lambda_w=float(lam), eta=float(eta))


def weierstrass(z, w: WeierstrassData, pole_tol: float = 1e-12):
    """(p, p', zeta, sigma) at complex z from theta quotients.

    Raises ZeroDivisionError when z is within pole_tol of a lattice point.
    """
    z = np.asarray(z, dtype=complex)
    # distance to the lattice 2m omega + 2n i omega'
    re = z.real - 2.0 * w.omega * np.round(z.real / (2.0 * w.omega))
    im = z.imag - 2.0 * w.omega_prime * np.round(z.imag / (2.0 * w.omega_prime))
    if np.any(np.hypot(re, im) < pole_tol * max(1.0, w.omega)):
        raise ZeroDivisionError("Weierstrass functions have a pole on the lattice")
    s = np.sqrt(w.lambda_w)
    u = z * s
    H, H1 = theta_functions(u, w.k)
    dH, dH1 = theta_functions(u, w.k, deriv=1)
    dH0, _ = theta_functions(0.0, w.k, deriv=1)
    _, H10 = theta_functions(0.0, w.k)
    c = dH0 / H10
    r = c * H1 / H
    dr = c * (dH1 * H - H1 * dH) / H**2
    p = w.e1 + w.lambda_w * r**2
    dp = 2.0 * w.lambda_w * r * dr * s
    zeta = w.eta * z / w.omega + s * dH / H
    sigma = np.exp(w.eta * z**2 / (2.0 * w.omega)) * H / (s * dH0)
    return p, dp, zeta, sigma
