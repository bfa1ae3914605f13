"""Profile correctors U1, U2 of the small-dissipation expansion and the ker L0 function v2.

Everything is in the physical variable x with period X. With
    L0 w = w''' + ((U0 - c0) w)'
the expansion U = U0 + d U1 + d^2 U2, c = c0 + d^2 c2 of a periodic solution of
    (U - c) U' + U''' + d (U'' + U'''') = 0
requires
    L0 U1 + U0'' + U0'''' = 0,
    L0 U2 + (U1^2/2 - c2 U0)' + U1'' + U1'''' = 0.
The adjoint kernel is span{1, U0}; solvability of the U1 equation is the selection
principle <U0'^2> = <U0''^2>.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cnoidal import PeriodicGrid, WaveParams, profile, profile_values
from .elliptic import complete_elliptic, elliptic_derivatives, jacobi_sn_cn_dn, jacobi_zeta
from . import selection


class SolvabilityError(ArithmeticError):
    pass


def fourier_diff_matrix(n: int, X: float) -> np.ndarray:
    """Real first-derivative collocation matrix on n equispaced points."""
    k = 2.0 * np.pi / X * np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    eye = np.eye(n)
    return np.fft.ifft(1j * k[:, None] * np.fft.fft(eye, axis=0), axis=0).real


def _dmat(n: int, X: float, order: int) -> np.ndarray:
    k = 2.0 * np.pi / X * np.fft.fftfreq(n, 1.0 / n)
    sym = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        sym[n // 2] = 0.0
    return np.fft.ifft(sym[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real


def _spec(f: np.ndarray, X: float, order: int) -> np.ndarray:
    return PeriodicGrid(X, f).derivative(order).values


def l0_matrix(w: WaveParams, n: int) -> np.ndarray:
    U = profile(w, n)[0].values
    D1 = _dmat(n, w.X, 1)
    D3 = _dmat(n, w.X, 3)
    return D3 + D1 @ np.diag(U - w.c0)


def apply_l0(w: WaveParams, f: np.ndarray) -> np.ndarray:
    n = f.shape[-1]
    U = profile(w, n)[0].values
    return _spec(f, w.X, 3) + _spec((U - w.c0) * f, w.X, 1)


def _solve(w: WaveParams, rhs: np.ndarray, parity: str) -> tuple[np.ndarray, np.ndarray]:
    """Minimal-norm least-squares solution of L0 f = rhs, then parity projection."""
    n = rhs.size
    A = l0_matrix(w, n)
    f, *_ = np.linalg.lstsq(A, rhs, rcond=1e-11)
    odd, even = PeriodicGrid(w.X, f).odd_even()
    f = odd if parity == "odd" else even
    return f, A


def _defect(w: WaveParams, rhs: np.ndarray, U: np.ndarray) -> float:
    scale = np.sqrt(np.mean(rhs**2)) * max(1.0, np.sqrt(np.mean(U**2)))
    d = max(abs(np.mean(rhs)), abs(np.mean(rhs * U)))
    return d / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class CorrectorSet:
    wave: WaveParams
    U0: np.ndarray
    U1: np.ndarray
    U2: np.ndarray | None
    c2: float | None
    v1: np.ndarray
    v2: np.ndarray

    @property
    def X(self) -> float:
        return self.wave.X

    @property
    def n(self) -> int:
        return self.U0.size


def solve_U1(w: WaveParams, n: int = 512, tol: float = 1e-8) -> np.ndarray:
    """Odd periodic U1 with L0 U1 = -(U0'' + U0''''), orthogonal to U0'."""
    U, _, U2, _, U4 = (g.values for g in profile(w, n))
    rhs = -(U2 + U4)
    if _defect(w, rhs, U) > tol:
        raise SolvabilityError("U1 equation not solvable: the wave is not selected")
    U1, _ = _solve(w, rhs, "odd")
    d = profile(w, n)[1].values
    U1 = U1 - np.dot(U1, d) / np.dot(d, d) * d
    return U1


def solve_U2(w: WaveParams, U1: np.ndarray, v2: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Even U2 and c2, normalized by <U2> = 0 and <U2 U0> = 0.

    The U2 equation is solvable for every c2 (the right-hand side is odd), so
    c2 and the v2 component of U2 are fixed by the two normalizations.
    """
    n = U1.size
    X = w.X
    U, dU = profile(w, n)[0].values, profile(w, n)[1].values
    base = -(_spec(0.5 * U1 * U1, X, 1) + _spec(U1, X, 2) + _spec(U1, X, 4))
    if _defect(w, base, U) > tol:
        raise SolvabilityError("U2 equation not solvable")
    P, _ = _solve(w, base, "even")
    # L0(1) = U0', so -c2 U0' on the left is absorbed by the constant c2 in U2
    one = np.ones(n)
    # U2 = P + c2 * 1 + a * v2
    M = np.array([[np.mean(one), np.mean(v2)], [np.mean(U), np.mean(v2 * U)]])
    r = -np.array([np.mean(P), np.mean(P * U)])
    c2, a = np.linalg.solve(M, r)
    return P + c2 * one + a * v2, float(c2)


def _fixed_period_family(w: WaveParams, k: float, hold: str) -> WaveParams:
    kap = 2.0 * complete_elliptic(k).K / w.X
    if hold == "u0":
        return WaveParams(k, kap, w.u0)
    if hold == "mean":
        ke0 = complete_elliptic(w.k)
        M = w.u0 + 12.0 * w.kappa**2 * (ke0.E / ke0.K - 1.0 + w.k**2)
        ke = complete_elliptic(k)
        return WaveParams(k, kap, M - 12.0 * kap**2 * (ke.E / ke.K - 1.0 + k * k))
    raise ValueError("hold must be 'u0' or 'mean'")


def fixed_period_k_derivative(w: WaveParams, x, hold: str = "u0") -> tuple[np.ndarray, float]:
    """(dU0/dk, dc0/dk) along waves of the same period, analytically.

    With z = kappa x and the modulus derivative of cn written through the Jacobi
    zeta function, the secular terms in x cancel because kappa'/kappa = K'/K.
    """
    k, kap = w.k, w.kappa
    ke = complete_elliptic(k)
    dK, dE = elliptic_derivatives(k)
    kc2 = (1.0 - k) * (1.0 + k)
    dkap = kap * dK / ke.K
    if hold == "u0":
        du0 = 0.0
    elif hold == "mean":
        r = ke.E / ke.K
        dr = (dE * ke.K - ke.E * dK) / ke.K**2
        du0 = -12.0 * (2.0 * kap * dkap * (r - 1.0 + k * k) + kap * kap * (dr + 2.0 * k))
    else:
        raise ValueError("hold must be 'u0' or 'mean'")
    A = w.amplitude
    dA = 24.0 * k * kap * kap + 24.0 * k * k * kap * dkap
    z = kap * np.asarray(x, dtype=float)
    sn, cn, dn = jacobi_sn_cn_dn(z, k)
    Z = jacobi_zeta(z, k)
    dU = du0 + dA * cn * cn - 2.0 * A * sn * cn * (k * k * sn * cn - dn * Z) / (k * kc2)
    dc = du0 + 2.0 * kap * dkap * (8.0 * k * k - 4.0) + 16.0 * k * kap * kap
    return dU, float(dc)


def kernel_v2(w: WaveParams, n: int = 512, hold: str = "u0", method: str = "analytic",
              h: float | None = None) -> np.ndarray:
    """v2 = 1 - dU0/dk / (dc0/dk) with the k-derivative taken along waves of the same period.

    hold selects the second frozen quantity (u0 or the mean <U0>). method "fd" uses
    central differences with one Richardson step instead of the closed form; it is
    limited by roundoff to a residual of order 1e-6 and serves as a cross-check.
    """
    x = np.arange(n) * (w.X / n)
    if method == "analytic":
        dU, dc = fixed_period_k_derivative(w, x, hold)
        return 1.0 - dU / dc
    if method != "fd":
        raise ValueError("method must be 'analytic' or 'fd'")
    if h is None:
        h = 1e-3 * min(w.k, 1.0 - w.k)

    def at(step):
        p = _fixed_period_family(w, w.k + step, hold)
        return profile_values(p, x), p.c0

    def d(step):
        (Up, cp), (Um, cm) = at(step), at(-step)
        return (Up - Um) / (2 * step), (cp - cm) / (2 * step)

    dU1, dc1 = d(h)
    dU2, dc2 = d(h / 2)
    dU = (4.0 * dU2 - dU1) / 3.0
    dc = (4.0 * dc2 - dc1) / 3.0
    return 1.0 - dU / dc


def kernel_residual(w: WaveParams, v: np.ndarray) -> float:
    return float(np.linalg.norm(apply_l0(w, v)) / np.linalg.norm(v))


@lru_cache(maxsize=64)
def correctors(k: float, n: int = 512, with_U2: bool = True, u0: float | None = None) -> CorrectorSet:
    """Correctors for the selected wave of modulus k (zero-mean gauge unless u0 is given)."""
    w = selection.zero_mean_wave(k) if u0 is None else selection.selected_wave(k, u0)
    U = profile(w, n)
    U1 = solve_U1(w, n)
    v2 = kernel_v2(w, n)
    U2 = c2 = None
    if with_U2:
        U2, c2 = solve_U2(w, U1, v2)
    return CorrectorSet(w, U[0].values, U1, U2, c2, U[1].values, v2)


def composite_residual(cs: CorrectorSet, delta: float, order: int = 2) -> float:
    """Max-norm defect of U0 + d U1 (+ d^2 U2) in the profile equation at speed c0 (+ d^2 c2)."""
    X = cs.X
    U = cs.U0 + delta * cs.U1
    c = cs.wave.c0
    if order >= 2:
        U = U + delta**2 * cs.U2
        c = c + delta**2 * cs.c2
    r = (U - c) * _spec(U, X, 1) + _spec(U, X, 3) + delta * (_spec(U, X, 2) + _spec(U, X, 4))
    return float(np.max(np.abs(r)))


def lambda1_origin(cs: CorrectorSet) -> float:
    """O(d) rate of the eigenvalue leaving the origin at xi = 0.

    -<B v2, U0 - M> / <v2, U0 - M> with B f = (U1 f)' + f'' + f''''. Subtracting the
    mean M makes the value independent of the Galilean gauge.
    """
    X = cs.X
    v = cs.v2
    Bv = _spec(cs.U1 * v, X, 1) + _spec(v, X, 2) + _spec(v, X, 4)
    Uc = cs.U0 - np.mean(cs.U0)
    den = np.mean(v * Uc)
    if abs(den) < 1e-12 * np.sqrt(np.mean(v * v) * np.mean(Uc * Uc)):
        raise ZeroDivisionError("<v2, U0 - M> vanishes")
    return float(-np.mean(Bv * Uc) / den)


def homogeneous_rate(k: float, n: int = 1024, h: float | None = None) -> float:
    """Independent route to lambda1_origin: d<U'^2 - U''^2>/dk over d<U^2/2>/dk
    along same-period, same-mean waves (homogeneous modulation)."""
    w = selection.zero_mean_wave(k)
    if h is None:
        h = 1e-3 * min(k, 1.0 - k)

    def q(kk):
        p = _fixed_period_family(w, kk, "mean")
        U, U1, U2, _, _ = (g.values for g in profile(p, n))
        return np.array([np.mean(U1**2) - np.mean(U2**2), np.mean(0.5 * U * U)])

    d1 = (q(k + h) - q(k - h)) / (2 * h)
    d2 = (q(k + h / 2) - q(k - h / 2)) / h
    d = (4.0 * d2 - d1) / 3.0
    return float(d[0] / d[1])
