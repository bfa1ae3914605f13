"""Cnoidal KdV waves: parameterizations, sampled profiles and period averages.

Canonical convention: U0(x) = u0 + 12 k^2 kappa^2 cn^2(kappa x, k), which solves
U'' + U^2/2 - c0 U = a with period X = 2K(k)/kappa and c0 = u0 + 8 kappa^2 k^2 - 4 kappa^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import complete_elliptic, jacobi_sn_cn_dn

K_MIN = 1e-8
K_MAX = 1.0 - 1e-7


class DegenerateWaveError(ValueError):
    """A parameter set describing a constant state or a solitary wave."""

    def __init__(self, limit: str, message: str):
        super().__init__(message)
        self.limit = limit


def check_modulus(k: float) -> float:
    k = float(k)
    if not np.isfinite(k) or k < K_MIN or k > K_MAX:
        raise DegenerateWaveError(
            "constant" if k < K_MIN else "solitary",
            f"modulus k={k!r} outside the admissible range [{K_MIN}, {K_MAX}]")
    return k


@dataclass(frozen=True)
class WaveParams:
    k: float
    kappa: float
    u0: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0.0:
            raise ValueError("kappa must be positive")

    @property
    def K(self) -> float:
        return complete_elliptic(self.k).K

    @property
    def E(self) -> float:
        return complete_elliptic(self.k).E

    @property
    def X(self) -> float:
        return 2.0 * self.K / self.kappa

    @property
    def amplitude(self) -> float:
        return 12.0 * self.k**2 * self.kappa**2

    @property
    def c0(self) -> float:
        return self.u0 + 8.0 * self.kappa**2 * self.k**2 - 4.0 * self.kappa**2

    @property
    def a(self) -> float:
        return RootTriple.from_params(self).aqc()[0]

    def shifted(self, s: float) -> "WaveParams":
        return WaveParams(self.k, self.kappa, self.u0 + s)


@dataclass(frozen=True)
class RootTriple:
    u1: float
    u2: float
    u3: float

    def __post_init__(self):
        if not self.u1 <= self.u2 <= self.u3:
            raise ValueError("roots must be ordered u1 <= u2 <= u3")

    @classmethod
    def from_params(cls, p: WaveParams) -> "RootTriple":
        u3 = p.u0 + p.amplitude
        return cls(u3 - 12.0 * p.kappa**2, p.u0, u3)

    @classmethod
    def from_aqc(cls, a: float, q: float, c: float) -> "RootTriple":
        # roots of u^3 - 3c u^2 - 6a u - 6q
        r = np.roots([1.0, -3.0 * c, -6.0 * a, -6.0 * q])
        if np.max(np.abs(r.imag)) > 1e-9 * max(1.0, np.max(np.abs(r))):
            raise DegenerateWaveError("none", "cubic has complex roots: no periodic orbit")
        u1, u2, u3 = np.sort(r.real)
        return cls(float(u1), float(u2), float(u3))

    def to_params(self) -> WaveParams:
        span = self.u3 - self.u1
        # k^2 = (u3 - u2)/(u3 - u1): u2 = u3 is the constant state, u1 = u2 the solitary wave
        if span <= 0.0 or self.u3 - self.u2 <= 1e-14 * max(1.0, span):
            raise DegenerateWaveError("constant", "u2 = u3: constant-state limit (k = 0)")
        if self.u2 - self.u1 <= 1e-14 * max(1.0, span):
            raise DegenerateWaveError("solitary", "u1 = u2: solitary-wave limit (k = 1)")
        k = np.sqrt((self.u3 - self.u2) / span)
        return WaveParams(float(k), float(np.sqrt(span / 12.0)), self.u2)

    def modulus(self) -> float:
        """k from the roots; degenerate triples return the limiting value 0 or 1."""
        return float(np.sqrt((self.u3 - self.u2) / (self.u3 - self.u1)))

    def aqc(self) -> tuple[float, float, float]:
        u1, u2, u3 = self.u1, self.u2, self.u3
        c = (u1 + u2 + u3) / 3.0
        a = -(u1 * u2 + u1 * u3 + u2 * u3) / 6.0
        q = u1 * u2 * u3 / 6.0
        return a, q, c

    def riemann(self) -> "RiemannInvariants":
        return RiemannInvariants(0.5 * (self.u1 + self.u2), 0.5 * (self.u1 + self.u3),
                                 0.5 * (self.u2 + self.u3))


@dataclass(frozen=True)
class RiemannInvariants:
    w1: float
    w2: float
    w3: float

    def roots(self) -> RootTriple:
        return RootTriple(self.w1 + self.w2 - self.w3, self.w1 + self.w3 - self.w2,
                          self.w2 + self.w3 - self.w1)


def convert(obj) -> dict:
    """All parameterizations of one wave, from any of them.

    Accepts WaveParams, RootTriple, RiemannInvariants or an (a, q, c) tuple.
    """
    if isinstance(obj, WaveParams):
        roots = RootTriple.from_params(obj)
        params = obj
    else:
        if isinstance(obj, RiemannInvariants):
            roots = obj.roots()
        elif isinstance(obj, RootTriple):
            roots = obj
        else:
            roots = RootTriple.from_aqc(*obj)
        params = roots.to_params()
    return {"params": params, "roots": roots, "riemann": roots.riemann(), "aqc": roots.aqc()}


@dataclass(frozen=True)
class PeriodicGrid:
    """Samples of one period on x_j = j X / n with Fourier differentiation."""
    X: float
    values: np.ndarray
    _hat: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * (self.X / self.n)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi / self.X * np.fft.fftfreq(self.n, 1.0 / self.n)

    def derivative(self, order: int = 1, shift: float = 0.0) -> "PeriodicGrid":
        """(d/dx + i shift)^order applied spectrally."""
        k = self.wavenumbers()
        sym = (1j * (k + shift)) ** order
        if order % 2 == 1 and shift == 0.0 and self.n % 2 == 0:
            sym[self.n // 2] = 0.0
        out = np.fft.ifft(sym * np.fft.fft(self.values))
        if shift == 0.0 and np.isrealobj(self.values):
            out = out.real
        return PeriodicGrid(self.X, out)

    def mean(self) -> complex | float:
        return np.mean(self.values)

    def odd_even(self) -> tuple[np.ndarray, np.ndarray]:
        """Odd and even parts about x = 0."""
        r = np.roll(self.values[::-1], 1)
        return 0.5 * (self.values - r), 0.5 * (self.values + r)


def grid_x(X: float, n: int) -> np.ndarray:
    return np.arange(n) * (X / n)


def profile_values(p: WaveParams, x) -> np.ndarray:
    _, cn, _ = jacobi_sn_cn_dn(p.kappa * np.asarray(x), p.k)
    return p.u0 + p.amplitude * cn * cn


def profile(p: WaveParams, n: int) -> list[PeriodicGrid]:
    """U0 and its first four derivatives on n points.

    Derivatives come from the analytic chain rule and the profile ODE.
    """
    x = grid_x(p.X, n)
    sn, cn, dn = jacobi_sn_cn_dn(p.kappa * x, p.k)
    A = p.amplitude
    U = p.u0 + A * cn * cn
    U1 = -2.0 * A * p.kappa * sn * cn * dn
    a = p.a
    c = p.c0
    U2 = a + c * U - 0.5 * U * U
    U3 = (c - U) * U1
    U4 = (c - U) * U2 - U1 * U1
    return [PeriodicGrid(p.X, v) for v in (U, U1, U2, U3, U4)]


def spectral_derivatives(g: PeriodicGrid, orders=(1, 2, 3, 4)) -> list[PeriodicGrid]:
    return [g.derivative(m) for m in orders]


@dataclass(frozen=True)
class Averages:
    mean: float
    half_square: float
    dx_square: float
    dxx_square: float
    mean_closed: float
    half_square_closed: float


def averages(p: WaveParams, n: int = 256, tol: float = 1e-12, n_max: int = 1 << 16) -> Averages:
    """Period averages <U>, <U^2/2>, <U'^2>, <U''^2> by trapezoid with doubling."""
    prev = None
    while True:
        U, U1, U2, _, _ = profile(p, n)
        cur = np.array([np.mean(U.values), np.mean(0.5 * U.values**2),
                        np.mean(U1.values**2), np.mean(U2.values**2)])
        if prev is not None and np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            break
        if n >= n_max:
            break
        prev = cur
        n *= 2
    r = RootTriple.from_params(p)
    a, _, c = r.aqc()
    mean_closed = r.u1 + (r.u3 - r.u1) * p.E / p.K
    return Averages(*(float(v) for v in cur), mean_closed=float(mean_closed),
                    half_square_closed=float(c * mean_closed + a))
