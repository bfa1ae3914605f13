"""Independent spectral oracles.

At delta = 0: the periodic Evans function det(R(X, lam) - exp(i xi X) I) from the
monodromy of Y' = A0(lam; x) Y, Y = (u, u', u''), for u''' + ((U0 - c0) u)' + lam u = 0.

At delta > 0: Hill's method for the Bloch operators
    L_xi w = -delta((d + i xi)^4 + (d + i xi)^2) w - (d + i xi)^3 w - (d + i xi)((U - c) w).
"""
from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from . import selection
from . import spectral_kdv as sk
from .cnoidal import WaveParams
from .elliptic import jacobi_sn_cn_dn
from .perturbed_profile import correctors


class StepUnderflowError(ArithmeticError):
    pass


def _coefficients(w: WaveParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sn, cn, dn = jacobi_sn_cn_dn(w.kappa * x, w.k)
    U = w.u0 + w.amplitude * cn * cn
    dU = -2.0 * w.amplitude * w.kappa * sn * cn * dn
    return U - w.c0, dU


def _rk4(w: WaveParams, lams: np.ndarray, n: int, m: int) -> np.ndarray:
    """Segment monodromies, shape (lam, segment, 3, 3): RK4 with n steps on each of m
    equal pieces of [0, X]."""
    h = w.X / (m * n)
    xs = (np.arange(m)[:, None] * n + np.arange(2 * n + 1)[None, :] / 2.0) * h
    Uc, dU = _coefficients(w, xs)
    Y = np.broadcast_to(np.eye(3, dtype=complex), (lams.size, m, 3, 3)).copy()
    lam = lams[:, None, None]

    def f(j, Y):
        # rows of A0: (0,1,0), (0,0,1), (-lam - U0', -(U0 - c0), 0)
        out = np.empty_like(Y)
        out[:, :, 0] = Y[:, :, 1]
        out[:, :, 1] = Y[:, :, 2]
        out[:, :, 2] = -(lam + dU[None, :, j, None]) * Y[:, :, 0] - Uc[None, :, j, None] * Y[:, :, 1]
        return out

    for i in range(n):
        j = 2 * i
        k1 = f(j, Y)
        k2 = f(j + 1, Y + 0.5 * h * k1)
        k3 = f(j + 1, Y + 0.5 * h * k2)
        k4 = f(j + 2, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Y


def _segments(w: WaveParams) -> int:
    # keep the growth over one piece near e^4 so each piece is well conditioned
    rate = np.sqrt(max(abs(w.c0 - w.u0), abs(w.c0 - w.u0 - w.amplitude), 1.0))
    return max(1, int(np.ceil(w.X * rate / 4.0)))


def _chain(P: np.ndarray) -> np.ndarray:
    out = P[0]
    for Q in P[1:]:
        out = Q @ out
    return out


@dataclass(frozen=True)
class MonodromyResult:
    lam: complex
    R: np.ndarray
    det_R: complex  # product of the piece determinants
    trace_inv: complex  # tr R^{-1} from the inverted pieces
    n_steps: int
    error: float  # Richardson estimate, relative to the piece norms


def monodromy_batch(k: float, lams, n_steps: int = 32, tol: float = 1e-12,
                    max_steps: int = 1 << 14) -> list[MonodromyResult]:
    """R(X, lam) for several lam as a product of piecewise monodromies. Steps per piece
    are doubled, with one Richardson step, until every piece is accurate to tol."""
    w = selection.zero_mean_wave(k)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    m = _segments(w)
    n = n_steps
    P1 = _rk4(w, lams, n, m)
    while True:
        P2 = _rk4(w, lams, 2 * n, m)
        diff = P2 - P1
        err = np.max(np.abs(diff), axis=(2, 3)) / 15.0 / np.maximum(1.0, np.max(np.abs(P2), axis=(2, 3)))
        if np.all(err <= tol):
            break
        n *= 2
        if 2 * n > max_steps:
            raise StepUnderflowError("monodromy did not reach the requested tolerance")
        P1 = P2
    P = P2 + diff / 15.0
    out = []
    for i, l in enumerate(lams):
        R = _chain(P[i])
        Rinv = _chain(np.linalg.inv(P[i][::-1]))
        det = complex(np.prod(np.linalg.det(P[i])))
        out.append(MonodromyResult(complex(l), R, det, complex(np.trace(Rinv)), 2 * n * m, float(np.max(err[i]))))
    return out


def monodromy_kdv(k: float, lam: complex, n_steps: int = 32, tol: float = 1e-12) -> MonodromyResult:
    return monodromy_batch(k, [lam], n_steps, tol)[0]


def convergence_slope(k: float, lam: complex, n: int = 16) -> float:
    """Observed order of plain RK4 from three step sizes."""
    w = selection.zero_mean_wave(k)
    la = np.array([lam], dtype=complex)
    m = _segments(w)
    R = [_rk4(w, la, n * 2**i, m)[0] for i in range(3)]
    e1 = np.max(np.abs(R[0] - R[1]))
    e2 = np.max(np.abs(R[1] - R[2]))
    return float(np.log2(e1 / e2))


def _evans_from(r: MonodromyResult, X: float, xi: float) -> tuple[complex, float]:
    """det(R - mu I) = -mu^3 + mu^2 tr R - mu det(R) tr R^{-1} + det R, which avoids the
    ill-conditioned minors of R when the growth over one period is large."""
    mu = np.exp(1j * xi * X)
    tr = np.trace(r.R)
    E = complex(-mu**3 + mu**2 * tr - mu * r.det_R * r.trace_inv + r.det_R)
    return E, abs(E) / max(float(np.max(np.abs(r.R))), 1.0)


def evans_eval(k: float, lam: complex, xi: float) -> complex:
    """det(R(X, lam) - exp(i xi X) I) at delta = 0."""
    return _evans_from(monodromy_kdv(k, lam), float(selection.period(k)), xi)[0]


@dataclass(frozen=True)
class EvansCheck:
    lam: complex
    xi: float
    E: complex
    relative: float  # |E| / max(1, max|R_ij|)


def evans_check(k: float, points) -> list[EvansCheck]:
    """Relative Evans values at (lam, xi) pairs, sharing one batched integration."""
    points = list(points)
    lams = [p[0] for p in points]
    X = float(selection.period(k))
    out = []
    for (lam, xi), r in zip(points, monodromy_batch(k, lams)):
        E, rel = _evans_from(r, X, xi)
        out.append(EvansCheck(complex(lam), float(xi), E, rel))
    return out


@dataclass(frozen=True)
class HillSpectrum:
    delta: float
    xi: float
    N: int
    eigenvalues: np.ndarray  # sorted by real part, descending
    trailing_coefficient: float


def _profile_coefficients(k: float, delta: float, with_c2: bool, n: int) -> tuple[np.ndarray, float]:
    cs = correctors(k, n, with_U2=True)
    U = cs.U0 + delta * cs.U1 + delta**2 * cs.U2
    c = cs.wave.c0 + (delta**2 * cs.c2 if with_c2 else 0.0)
    return np.fft.fft(U - c) / n, cs.X


def hill_matrix(k: float, delta: float, xi: float, N: int = 64, with_c2: bool = True,
                n_profile: int = 512) -> tuple[np.ndarray, float]:
    n_profile = max(n_profile, 1 << int(np.ceil(np.log2(4 * N + 2))))
    W, X = _profile_coefficients(k, delta, with_c2, n_profile)
    m = np.arange(-N, N + 1)
    q = xi + 2.0 * np.pi * m / X
    iq = 1j * q
    conv = W[(m[:, None] - m[None, :]) % n_profile]
    L = -iq[:, None] * conv
    L[np.diag_indices_from(L)] += -delta * (iq**4 + iq**2) - iq**3
    trailing = float(np.max(np.abs(W[[2 * N, -2 * N]])) if 2 * N < n_profile // 2 else np.inf)
    return L, trailing


def hill_spectrum(k: float, delta: float, xi: float, N: int = 64, with_c2: bool = True) -> HillSpectrum:
    if not 0.0 < delta <= 0.2:
        raise ValueError("delta must lie in (0, 0.2]")
    L, trailing = hill_matrix(k, delta, xi, N, with_c2)
    if trailing > 1e-12:
        warnings.warn(f"profile Fourier coefficient {trailing:.2e} at the truncation edge")
    ev = np.linalg.eigvals(L)
    if not np.all(np.isfinite(ev)):
        raise ArithmeticError("eigensolver did not converge")
    ev = ev[np.argsort(-ev.real, kind="stable")]
    return HillSpectrum(float(delta), float(xi), int(N), ev, trailing)


def hill_eigenvalue_near(k: float, delta: float, xi: float, target: complex, N: int = 64,
                         tol: float = 1e-8, N_max: int = 512, with_c2: bool = True) -> tuple[complex, int]:
    """Eigenvalue nearest target, doubling N until it moves by at most tol."""
    prev = None
    while True:
        ev = hill_spectrum(k, delta, xi, N, with_c2).eigenvalues
        cur = complex(ev[np.argmin(np.abs(ev - target))])
        if prev is not None and abs(cur - prev) <= tol:
            return cur, N
        if 2 * N > N_max:
            return cur, N
        prev = cur
        N *= 2


def match_nearest(sources, targets) -> list[int]:
    """Nearest-neighbour indices of targets for each source; raises if two share a target."""
    targets = np.asarray(targets)
    idx = [int(np.argmin(np.abs(targets - s))) for s in sources]
    if len(set(idx)) != len(idx):
        raise ValueError("nearest-neighbour matching is not injective")
    return idx


def evans_band_check(X: float, n_samples: int = 20, integrand: str = "dn2") -> list[EvansCheck]:
    """Evans function at (lam0(eta), xi(eta)) for band samples split between the two bands."""
    k = selection.modulus_from_period(X)
    n_up = n_samples // 2
    params = [("upper", q) for q in np.linspace(0.02, 0.98, n_up)]
    params += [("lower", q) for q in np.geomspace(0.01, 20.0, n_samples - n_up)]
    pts = []
    for band, q in params:
        bp = sk.band_point_from_param(k, band, q)
        if integrand != "dn2":
            bp = sk.band_sample(k, bp.eta, bp.branch, integrand=integrand)
        pts.append((bp.lambda0, bp.xi))
    return evans_check(k, pts)


@dataclass(frozen=True)
class HillConsistency:
    X: float
    xi: float
    lambda0: complex
    lambda1: complex
    deltas: tuple[float, ...]
    eigenvalues: tuple[complex, ...]
    gaps: tuple[float, ...]  # |lam_Hill - (lam0 + delta lam1)|

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(a / b for a, b in zip(self.gaps, self.gaps[1:]))


def hill_consistency(X: float = 13.0, deltas=(0.1, 0.05, 0.025), xi: float | None = None,
                     with_c2: bool = True, band: str = "lower") -> HillConsistency:
    """Hill eigenvalues against lam0 + delta lam1 at the first band point with Bloch parameter xi."""
    k = selection.modulus_from_period(X)
    if xi is None:
        xi = 0.3 * np.pi / X
    pts = sk.band_points_at_xi(k, xi, band)
    if not pts:
        raise ArithmeticError(f"no {band} band point with xi = {xi}")
    bp = pts[0]
    l1 = sk.lambda1(bp).lambda1
    lams, gaps = [], []
    for d in deltas:
        lam, _ = hill_eigenvalue_near(k, d, bp.xi, bp.lambda0 + d * l1, with_c2=with_c2)
        lams.append(lam)
        gaps.append(abs(lam - bp.lambda0 - d * l1))
    return HillConsistency(float(X), float(bp.xi), bp.lambda0, l1, tuple(deltas), tuple(lams), tuple(gaps))
