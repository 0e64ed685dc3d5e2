"""Periodic spectral grids on the d-torus (d = 1, 2).

Grid functions are stored as flat complex vectors of length ``N**d`` in
physical space (C order when d = 2).  All spectral quantities are pure
functions of those values:

    fhat_k = N**-d * sum_j f(x_j) exp(-i k.x_j)

so that ``L**d * sum_k |fhat_k|**2`` equals the quadrature-weighted L2 norm
``(L/N)**d * sum_j |f(x_j)|**2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ZeroModeWarning(UserWarning):
    """A homogeneous negative-order norm dropped a nonzero mean."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``N`` points per axis and period ``L``."""

    d: int
    N: int
    L: float = 2 * np.pi
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if not isinstance(self.N, (int, np.integer)) or not _is_power_of_two(int(self.N)):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if self.N < 8:
            raise ValueError(f"N must be at least 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"period L must be positive, got {self.L}")

    @property
    def n(self) -> int:
        """Total number of grid points."""
        return self.N**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def weight(self) -> float:
        """Quadrature weight of one grid cell."""
        return self.h**self.d

    @cached_property
    def axis_points(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        # (2pi/L) * {-N/2, ..., N/2-1} in FFT order
        return 2 * np.pi / self.L * np.fft.fftfreq(self.N, d=1.0 / self.N)

    @cached_property
    def x(self) -> np.ndarray:
        """Coordinates, shape ``(d, n)``."""
        mesh = np.meshgrid(*([self.axis_points] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumber lattice in FFT order, shape ``(d, n)``."""
        mesh = np.meshgrid(*([self.axis_wavenumbers] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt((self.k**2).sum(axis=0))

    # -- transforms ---------------------------------------------------------

    def fft(self, f) -> np.ndarray:
        f = np.asarray(f)
        lead = f.shape[:-1]
        fh = np.fft.fftn(f.reshape(lead + self.shape), axes=tuple(range(-self.d, 0)))
        return fh.reshape(lead + (self.n,)) / self.n

    def ifft(self, fh) -> np.ndarray:
        fh = np.asarray(fh)
        lead = fh.shape[:-1]
        f = np.fft.ifftn(fh.reshape(lead + self.shape), axes=tuple(range(-self.d, 0)))
        return f.reshape(lead + (self.n,)) * self.n

    def multiplier(self, f, symbol) -> np.ndarray:
        """Apply the Fourier multiplier with values ``symbol`` (length n)."""
        return self.ifft(symbol * self.fft(f))

    # -- inner products and norms ------------------------------------------

    def inner(self, f, g) -> complex:
        """Weighted L2 inner product, linear in ``f``."""
        return self.weight * np.vdot(g, f)

    def l2_norm(self, f) -> float:
        return float(np.sqrt(self.weight) * np.linalg.norm(f))

    def sobolev_norm(self, f, s: float, homogeneous: bool = True) -> float:
        """Fractional Sobolev norm of order ``s`` in [-1, 1].

        The homogeneous norm always drops the zero mode; for ``s < 0`` a
        mean above round-off level triggers :class:`ZeroModeWarning`.
        """
        if not -1.0 <= s <= 1.0:
            raise ValueError(f"order s must lie in [-1, 1], got {s}")
        fh2 = np.abs(self.fft(f)) ** 2
        if homogeneous:
            nz = self.kabs > 0
            if s < 0 and fh2[~nz].sum() > 1e-24 * fh2.sum():
                warnings.warn("zero mode excluded from homogeneous norm", ZeroModeWarning)
            total = np.sum(self.kabs[nz] ** (2 * s) * fh2[nz])
        else:
            total = np.sum((1 + self.kabs**2) ** s * fh2)
        return float(np.sqrt(self.L**self.d * total))

    # -- differential operators --------------------------------------------

    def gradient(self, f) -> np.ndarray:
        """Spectral gradient, shape ``(d, n)``."""
        fh = self.fft(f)
        return np.stack([self.ifft(1j * kj * fh) for kj in self.k])

    def divergence(self, v) -> np.ndarray:
        v = np.asarray(v)
        return sum(self.ifft(1j * kj * self.fft(vj)) for kj, vj in zip(self.k, v))

    def antiderivative(self, f) -> np.ndarray:
        """Inverse of the d = 1 derivative on mean-zero fields."""
        if self.d != 1:
            raise ValueError("antiderivative is defined for d = 1 only")
        k = self.k[0]
        sym = np.zeros(self.n, dtype=complex)
        nz = k != 0
        sym[nz] = 1.0 / (1j * k[nz])
        return self.multiplier(f, sym)

    def half_laplacian(self, f, power: float = 1.0) -> np.ndarray:
        """(-Laplacian)**(power/2), i.e. the multiplier ``|k|**power``."""
        return self.multiplier(f, self.kabs**power)

    def mean(self, f) -> complex:
        return complex(np.mean(f))

    # -- dense operator matrices -------------------------------------------

    def _dense(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def multiplier_matrix(self, symbol) -> np.ndarray:
        """Dense matrix of a Fourier multiplier acting on flat grid vectors."""
        eye = np.eye(self.n, dtype=complex)
        return self.ifft(symbol * self.fft(eye.T)).T

    def diff_matrix(self, j: int) -> np.ndarray:
        """Dense matrix of the spectral derivative along axis ``j``."""
        return self._dense(("diff", j), lambda: self.multiplier_matrix(1j * self.k[j]))

    def abs_derivative_matrix(self, power: float = 1.0) -> np.ndarray:
        """Dense matrix of the multiplier ``|k|**power`` (zero mode mapped to 0)."""
        def build():
            sym = np.zeros(self.n)
            nz = self.kabs > 0
            sym[nz] = self.kabs[nz] ** power
            return self.multiplier_matrix(sym)

        return self._dense(("absd", float(power)), build)

    # -- test data ----------------------------------------------------------

    def random_bandlimited(self, rng, count: int | None = None, fraction: float = 0.75,
                           mean_zero: bool = False, real: bool = False) -> np.ndarray:
        """Random fields whose spectrum is supported in ``|k_j| < fraction * N/2``.

        The top quarter of the spectrum stays empty by default so spectral
        differentiation is exact on the samples.
        """
        shape = (1 if count is None else count, self.n)
        coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        kmax = fraction * self.N / 2 * (2 * np.pi / self.L)
        mask = np.all(np.abs(self.k) < kmax, axis=0)
        if mean_zero:
            mask &= self.kabs > 0
        # mild decay keeps gradients comparable to the field itself
        coef *= mask / (1 + self.kabs**2) ** 0.5
        f = self.ifft(coef)
        if real:
            f = f.real.astype(complex)
            if mean_zero:
                f -= f.mean(axis=-1, keepdims=True)
        return f[0] if count is None else f

    def resample(self, f, source: Grid) -> np.ndarray:
        """Spectral interpolation of ``f`` given on ``source`` onto this grid.

        Only refinement (or equal resolution) is supported, so no modes are lost
        apart from splitting the source Nyquist mode.
        """
        if source.d != self.d or source.L != self.L or source.N > self.N:
            raise ValueError("resample needs a finer grid of the same dimension and period")
        fh = source.fft(f)
        out = np.zeros(self.n, dtype=complex)
        unit = 2 * np.pi / self.L
        src_idx = np.rint(source.k / unit).astype(int) % self.N
        flat = np.ravel_multi_index(tuple(src_idx), self.shape)
        out[flat] = fh
        return self.ifft(out)

    def mode(self, wavevector) -> np.ndarray:
        """Plane wave ``exp(i k.x)`` for an integer multiple of 2pi/L per axis."""
        kv = 2 * np.pi / self.L * np.atleast_1d(np.asarray(wavevector, dtype=float))
        return np.exp(1j * (kv[:, None] * self.x).sum(axis=0))


def make_grid(d: int, N: int, L: float = 2 * np.pi) -> Grid:
    return Grid(d, N, L)
