"""Scalar time profiles psi(t) used to build separable space-time fields.

Every profile knows its value, derivative, support and a bound on its tail
beyond a given time, which is what the quadrature error budgets need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class Profile:
    """Base class: ``psi(t)`` on t >= 0 with support ``[start, end]``."""

    start: float = 0.0
    end: float = math.inf

    def __call__(self, t) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, t) -> np.ndarray:
        raise NotImplementedError

    @property
    def compact(self) -> bool:
        return math.isfinite(self.end)

    def breakpoints(self) -> list[float]:
        """Points where the profile is not smooth (panel edges go there)."""
        return [p for p in (self.start, self.end) if math.isfinite(p)]

    def tail_sup(self, T: float) -> float:
        """sup_{t >= T} |psi(t)|."""
        return 0.0 if T >= self.end else math.inf

    def tail_integral(self, T: float) -> float:
        """int_T^inf |psi(t)| dt."""
        return 0.0 if T >= self.end else math.inf

    def scaled(self, c: complex) -> Profile:
        return _Scaled(self, c)

    def shifted(self, s: float) -> Profile:
        return _Shifted(self, s)


@dataclass(frozen=True)
class Bump(Profile):
    """Polynomial bump ``(1 - y^2)^power`` on [start, end], y the rescaled variable.

    Piecewise polynomial, so Gauss-Legendre panels aligned with the support
    integrate it exactly together with any other polynomial factor.
    """

    start: float
    end: float
    power: int = 4

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError("bump support must have positive length")

    def _y(self, t):
        t = np.asarray(t, dtype=float)
        c, r = 0.5 * (self.start + self.end), 0.5 * (self.end - self.start)
        return (t - c) / r, r

    def __call__(self, t):
        y, _ = self._y(t)
        return np.where(np.abs(y) < 1, (1 - y**2) ** self.power, 0.0)

    def derivative(self, t):
        y, r = self._y(t)
        p = self.power
        return np.where(np.abs(y) < 1, -2 * p * y * (1 - y**2) ** (p - 1) / r, 0.0)


@dataclass(frozen=True)
class SmoothBump(Profile):
    """C-infinity bump ``exp(1 - 1/(1 - y^2))`` on [start, end] (peak value 1)."""

    start: float
    end: float

    def _y(self, t):
        t = np.asarray(t, dtype=float)
        c, r = 0.5 * (self.start + self.end), 0.5 * (self.end - self.start)
        return (t - c) / r, r

    def __call__(self, t):
        y, _ = self._y(t)
        inside = np.abs(y) < 1
        ys = np.where(inside, y, 0.0)
        return np.where(inside, np.exp(1 - 1 / (1 - ys**2)), 0.0)

    def derivative(self, t):
        y, r = self._y(t)
        inside = np.abs(y) < 1
        ys = np.where(inside, y, 0.0)
        val = np.exp(1 - 1 / (1 - ys**2))
        return np.where(inside, -2 * ys / (1 - ys**2) ** 2 * val / r, 0.0)


@dataclass(frozen=True)
class Exponential(Profile):
    """``exp(-rate t)`` on t >= 0."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def __call__(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def derivative(self, t):
        return -self.rate * self(t)

    def tail_sup(self, T):
        return math.exp(-self.rate * max(T, 0.0))

    def tail_integral(self, T):
        return math.exp(-self.rate * max(T, 0.0)) / self.rate


@dataclass(frozen=True)
class PowerLaw(Profile):
    """``(1 + t)^(-gamma)`` on t >= 0; lies in L^p(R_+) iff gamma p > 1."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def __call__(self, t):
        return (1 + np.asarray(t, dtype=float)) ** (-self.gamma)

    def derivative(self, t):
        return -self.gamma * (1 + np.asarray(t, dtype=float)) ** (-self.gamma - 1)

    def tail_sup(self, T):
        return (1 + max(T, 0.0)) ** (-self.gamma)

    def tail_integral(self, T):
        if self.gamma <= 1:
            return math.inf
        return (1 + max(T, 0.0)) ** (1 - self.gamma) / (self.gamma - 1)


@dataclass(frozen=True)
class _Scaled(Profile):
    base: Profile
    c: complex

    @property
    def start(self):
        return self.base.start

    @property
    def end(self):
        return self.base.end

    def __call__(self, t):
        return self.c * self.base(t)

    def derivative(self, t):
        return self.c * self.base.derivative(t)

    def breakpoints(self):
        return self.base.breakpoints()

    def tail_sup(self, T):
        return abs(self.c) * self.base.tail_sup(T)

    def tail_integral(self, T):
        return abs(self.c) * self.base.tail_integral(T)


@dataclass(frozen=True)
class _Shifted(Profile):
    base: Profile
    s: float

    @property
    def start(self):
        return self.base.start + self.s

    @property
    def end(self):
        return self.base.end + self.s

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.base(t - self.s)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.base.derivative(t - self.s)

    def breakpoints(self):
        return [p + self.s for p in self.base.breakpoints()]

    def tail_sup(self, T):
        return self.base.tail_sup(T - self.s)

    def tail_integral(self, T):
        return self.base.tail_integral(T - self.s)


def resolution_defect(profile: Profile, edges, order: int) -> float:
    """Fraction of the profile's energy that an ``order``-point rule per panel misses.

    On each panel the profile is expanded in Legendre polynomials up to
    degree ``2 order - 1``; the energy in degrees ``>= order`` relative to the
    total is the analogue of spectral energy above the Nyquist mode.
    """
    x, w = np.polynomial.legendre.leggauss(2 * order)
    deg = np.arange(2 * order)
    V = np.polynomial.legendre.legvander(x, 2 * order - 1)
    norms = 2.0 / (2 * deg + 1)
    hi = lo = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        vals = np.asarray(profile(t), dtype=complex)
        coef = (V * w[:, None]).T @ vals / norms
        energy = np.abs(coef) ** 2 * norms * 0.5 * (b - a)
        lo += energy[:order].sum()
        hi += energy[order:].sum()
    total = lo + hi
    return float(hi / total) if total > 0 else 0.0


class SeparableField:
    """Finite sum ``u(x, t) = sum_m f_m(x) psi_m(t)`` on a grid.

    Parameters
    ----------
    grid : Grid
        Tangential grid the spatial factors live on.
    terms : sequence of (array, Profile)
        Spatial factor (length ``grid.n``) and time profile of each term.
    """

    def __init__(self, grid, terms=()):
        self.grid = grid
        self.terms = [(np.asarray(f, dtype=complex), p) for f, p in terms]
        for f, _ in self.terms:
            if f.shape != (grid.n,):
                raise ValueError(f"spatial factor has shape {f.shape}, expected ({grid.n},)")

    @classmethod
    def zero(cls, grid) -> SeparableField:
        return cls(grid, ())

    @property
    def is_zero(self) -> bool:
        return all(not np.any(f) for f, _ in self.terms)

    @property
    def spatial(self) -> np.ndarray:
        """Spatial factors stacked, shape ``(terms, n)``."""
        if not self.terms:
            return np.zeros((0, self.grid.n), dtype=complex)
        return np.stack([f for f, _ in self.terms])

    def profile_values(self, t) -> np.ndarray:
        """psi_m(t), shape ``(terms, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.terms:
            return np.zeros((0, t.size), dtype=complex)
        return np.stack([np.asarray(p(t), dtype=complex) for _, p in self.terms])

    def profile_derivatives(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if not self.terms:
            return np.zeros((0, t.size), dtype=complex)
        return np.stack([np.asarray(p.derivative(t), dtype=complex) for _, p in self.terms])

    def __call__(self, t) -> np.ndarray:
        """Field values, shape ``(len(t), n)``."""
        return self.profile_values(t).T @ self.spatial

    def dt(self, t) -> np.ndarray:
        return self.profile_derivatives(t).T @ self.spatial

    def breakpoints(self) -> list[float]:
        return sorted({b for _, p in self.terms for b in p.breakpoints()})

    @property
    def end(self) -> float:
        return max((p.end for _, p in self.terms), default=0.0)

    @property
    def start(self) -> float:
        return min((p.start for _, p in self.terms), default=0.0)

    def tail_sup(self, T: float) -> np.ndarray:
        """Per-term tail bounds sup_{t >= T} |psi_m|."""
        return np.array([p.tail_sup(T) for _, p in self.terms])

    def tail_integral(self, T: float) -> np.ndarray:
        return np.array([p.tail_integral(T) for _, p in self.terms])

    def shifted(self, s: float) -> SeparableField:
        return SeparableField(self.grid, [(f, p.shifted(s)) for f, p in self.terms])

    def scaled(self, c: complex) -> SeparableField:
        return SeparableField(self.grid, [(c * f, p) for f, p in self.terms])

    def __add__(self, other: SeparableField) -> SeparableField:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return SeparableField(self.grid, self.terms + other.terms)

    def resolution_defect(self, edges, order: int) -> float:
        return max((resolution_defect(p, edges, order) for _, p in self.terms), default=0.0)
