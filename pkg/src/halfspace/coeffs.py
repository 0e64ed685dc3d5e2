"""Coefficient fields A(x) and their certificates.

The (d+1) x (d+1) matrix is split as

    A = [[A', r1],
         [r2^T, b]]

with tangential block ``A'``, off-block vectors ``r1`` (last column) and
``r2`` (last row), and the corner scalar ``b``.  Every entry depends on the
tangential variable only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import io as _io
from .grid import Grid

RETRY_CAP = 20
BUMP_WIDTH_CELLS = 4


@dataclass(frozen=True)
class CoefficientField:
    """Pointwise matrix field sampled on ``grid``; ``A`` has shape (d+1, d+1, n)."""

    grid: Grid
    A: np.ndarray

    def __post_init__(self):
        m = self.grid.d + 1
        A = np.asarray(self.A, dtype=complex)
        if A.shape != (m, m, self.grid.n):
            raise ValueError(f"expected A of shape {(m, m, self.grid.n)}, got {A.shape}")
        if np.any(A[m - 1, m - 1] == 0):
            raise ValueError("corner coefficient b must not vanish")
        object.__setattr__(self, "A", A)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def tangential(self) -> np.ndarray:
        return self.A[: self.d, : self.d]

    @property
    def r1(self) -> np.ndarray:
        return self.A[: self.d, self.d]

    @property
    def r2(self) -> np.ndarray:
        return self.A[self.d, : self.d]

    @property
    def b(self) -> np.ndarray:
        return self.A[self.d, self.d]

    def adjoint(self) -> CoefficientField:
        return CoefficientField(self.grid, np.conj(np.swapaxes(self.A, 0, 1)))

    def pointwise(self) -> np.ndarray:
        """Matrices stacked per grid point, shape (n, d+1, d+1)."""
        return np.moveaxis(self.A, -1, 0)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.A - np.conj(np.swapaxes(self.A, 0, 1)))))

    def divergence_r1(self) -> np.ndarray:
        return self.grid.divergence(self.r1)

    def divergence_r2(self) -> np.ndarray:
        return self.grid.divergence(self.r2)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        g = self.grid
        return {"grid": {"d": g.d, "N": g.N, "L": g.L}, "A": _io.array_to_json(self.A)}

    @classmethod
    def from_dict(cls, obj: dict) -> CoefficientField:
        g = obj["grid"]
        return cls(Grid(int(g["d"]), int(g["N"]), float(g["L"])), _io.array_from_json(obj["A"]))

    def save(self, path) -> None:
        _io.dump_json(self.to_dict(), path)

    @classmethod
    def load(cls, path) -> CoefficientField:
        return cls.from_dict(_io.load_json(path))


@dataclass
class EllipticityReport:
    nu1: float
    nu2: float
    witness_index: int
    witness_vector: np.ndarray

    @property
    def ok(self) -> bool:
        return 0 < self.nu1 <= self.nu2 < np.inf


def check_ellipticity(A: CoefficientField) -> EllipticityReport:
    """Pointwise coercivity and boundedness constants of ``A``.

    ``nu1`` is the minimum over grid points of the smallest eigenvalue of
    the Hermitian part, ``nu2`` the maximum spectral norm.  A failing field
    is reported (``ok`` is False), not raised.
    """
    mats = A.pointwise()
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2)))
    evals, evecs = np.linalg.eigh(herm)
    low = evals[:, 0]
    idx = int(np.argmin(low))
    nu2 = float(np.max(np.linalg.norm(mats, ord=2, axis=(1, 2))))
    return EllipticityReport(float(low[idx]), nu2, idx, evecs[idx, :, 0])


@dataclass
class ConditionReport:
    """Structural conditions on the off-block vectors and corner coefficient."""

    offblock_sum_real: bool
    b_real: bool
    offblock_violation: float
    b_violation: float
    hermitian: bool
    div_r1: np.ndarray = field(repr=False)
    div_r2: np.ndarray = field(repr=False)
    alpha: float | None = None
    scan_r1: tuple[float, float] | None = None
    scan_r2: tuple[float, float] | None = None

    @property
    def symmetric(self) -> bool:
        return self.offblock_sum_real and self.b_real


def check_symmetry_condition(A: CoefficientField, tol: float = 1e-12) -> ConditionReport:
    """Test Im(r1 + r2) = 0 and Im b = 0, plus the Hermitian flag."""
    v_off = float(np.max(np.abs(np.imag(A.r1 + A.r2)))) if A.d else 0.0
    v_b = float(np.max(np.abs(np.imag(A.b))))
    return ConditionReport(
        offblock_sum_real=v_off <= tol,
        b_real=v_b <= tol,
        offblock_violation=v_off,
        b_violation=v_b,
        hermitian=A.hermitian_defect() <= 1e-12,
        div_r1=A.divergence_r1(),
        div_r2=A.divergence_r2(),
    )


def condition_report(A: CoefficientField, alpha: float = 0.0, trials: int = 200,
                     seed: int = 0) -> ConditionReport:
    rep = check_symmetry_condition(A)
    rep.alpha = alpha
    rep.scan_r1 = bilinear_estimate_scan(A.grid, rep.div_r1, alpha, trials, seed)
    rep.scan_r2 = bilinear_estimate_scan(A.grid, rep.div_r2, alpha, trials, seed)
    return rep


# -- bilinear estimate scan ---------------------------------------------------

def _torus_distance(grid: Grid, center) -> np.ndarray:
    diff = grid.x - np.asarray(center, dtype=float)[:, None]
    diff = (diff + grid.L / 2) % grid.L - grid.L / 2
    return np.sqrt((diff**2).sum(axis=0))


def _wave_packets(grid: Grid, rng, trials: int, focus) -> np.ndarray:
    """Gaussian packets over a range of widths; half of them centred at ``focus``."""
    sig = np.exp(rng.uniform(np.log(2 * grid.h), np.log(grid.L / 8), trials))
    out = np.empty((trials, grid.n), dtype=complex)
    for i in range(trials):
        if i % 2 == 0:
            center = focus
        else:
            center = rng.uniform(0, grid.L, grid.d)
        r = _torus_distance(grid, center)
        phase = rng.uniform(0, 2 * np.pi)
        kick = rng.integers(-2, 3, grid.d) * 2 * np.pi / grid.L
        out[i] = np.exp(-0.5 * (r / sig[i]) ** 2 + 1j * (phase + kick @ grid.x))
    # strip the top quarter of the spectrum
    fh = grid.fft(out)
    kmax = 0.75 * grid.N / 2 * (2 * np.pi / grid.L)
    fh *= np.all(np.abs(grid.k) < kmax, axis=0)
    return grid.ifft(fh)


def _envelope_fit(s: np.ndarray, rho: np.ndarray, tol: float = 1e-12) -> tuple[float, float]:
    """Least-squares line ``delta*s + C`` lying above every point (s_i, rho_i).

    Exact active-set enumeration for the two-parameter problem with
    ``delta, C >= 0``.
    """
    scale = max(float(rho.max()), 1e-300)
    slack = tol * scale

    def feasible(dl, c):
        return dl >= -slack and c >= -slack and np.all(dl * s + c >= rho - slack)

    def cost(dl, c):
        return float(np.sum((dl * s + c - rho) ** 2))

    cands = [(0.0, float(rho.max())), (float(np.max(rho / s)), 0.0)]
    # unconstrained least squares
    X = np.stack([s, np.ones_like(s)], axis=1)
    sol, *_ = np.linalg.lstsq(X, rho, rcond=None)
    cands.append((float(sol[0]), float(sol[1])))
    # one active data constraint: C = rho_j - delta*s_j
    for j in range(len(s)):
        ds = s - s[j]
        dr = rho - rho[j]
        lo, hi = 0.0, rho[j] / s[j]
        pos, neg = ds > 0, ds < 0
        if pos.any():
            lo = max(lo, float(np.max(dr[pos] / ds[pos])))
        if neg.any():
            hi = min(hi, float(np.min(dr[neg] / ds[neg])))
        if np.any((ds == 0) & (dr > slack)) or lo > hi + 1e-14 * max(1.0, abs(hi)):
            continue
        denom = float(ds @ ds)
        dl = -float(ds @ (rho[j] - rho)) / denom if denom > 0 else lo
        dl = min(max(dl, lo), hi)
        cands.append((dl, float(rho[j] - dl * s[j])))
    best = min((c for c in cands if feasible(*c)), key=lambda c: cost(*c))
    return max(best[0], 0.0), max(best[1], 0.0)


def bilinear_estimate_scan(grid: Grid, h, alpha: float = 0.0, trials: int = 200,
                           seed: int = 0, return_samples: bool = False):
    """Fit (delta, C) in |<h f, f>| <= delta ||f||_{H^{(1+a)/2}} ||f||_{H^{(1-a)/2}} + C ||f||^2.

    The first factor is homogeneous, the second inhomogeneous.  Test fields
    are band-limited Gaussian wave packets of random width, half of them
    centred where ``|h|`` peaks so concentrated parts are seen at every
    scale.  Among all feasible (delta, C) the pair closest to the samples
    in least squares is returned.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    h = np.asarray(h, dtype=complex)
    if not np.any(h):
        return (0.0, 0.0, None) if return_samples else (0.0, 0.0)
    rng = np.random.default_rng(seed)
    focus = grid.x[:, int(np.argmax(np.abs(h)))]
    fs = _wave_packets(grid, rng, trials, focus)
    y = np.array([abs(grid.inner(h * f, f)) for f in fs])
    a = np.array([grid.sobolev_norm(f, (1 + alpha) / 2, homogeneous=True)
                  * grid.sobolev_norm(f, (1 - alpha) / 2, homogeneous=False) for f in fs])
    c = np.array([grid.l2_norm(f) ** 2 for f in fs])
    delta, C = _envelope_fit(a / c, y / c)
    if return_samples:
        return delta, C, {"ratio": y / c, "scale": a / c}
    return delta, C


# -- builders -----------------------------------------------------------------

def _broadcast(grid: Grid, value, shape) -> np.ndarray:
    arr = np.asarray(value, dtype=complex)
    if arr.shape == shape:
        return np.repeat(arr[..., None], grid.n, axis=-1)
    return np.broadcast_to(arr, shape + (grid.n,)).copy()


def constant(grid: Grid, matrix) -> CoefficientField:
    m = grid.d + 1
    return CoefficientField(grid, _broadcast(grid, matrix, (m, m)))


def identity(grid: Grid) -> CoefficientField:
    return constant(grid, np.eye(grid.d + 1))


def block(grid: Grid, tangential, b=1.0) -> CoefficientField:
    """Block field: ``r1 = r2 = 0``; ``tangential`` is (d, d) or (d, d, n)."""
    d = grid.d
    A = np.zeros((d + 1, d + 1, grid.n), dtype=complex)
    A[:d, :d] = _broadcast(grid, tangential, (d, d)) if np.ndim(tangential) < 3 else tangential
    A[d, d] = b
    return _checked(CoefficientField(grid, A))


def from_blocks(grid: Grid, tangential, r1, r2, b) -> CoefficientField:
    d = grid.d
    A = np.zeros((d + 1, d + 1, grid.n), dtype=complex)
    A[:d, :d] = tangential if np.ndim(tangential) == 3 else _broadcast(grid, tangential, (d, d))
    A[:d, d] = r1 if np.ndim(r1) == 2 else _broadcast(grid, r1, (d,))
    A[d, :d] = r2 if np.ndim(r2) == 2 else _broadcast(grid, r2, (d,))
    A[d, d] = b
    return CoefficientField(grid, A)


def smooth_field(grid: Grid, rng, modes: int = 2) -> np.ndarray:
    """Real trigonometric polynomial with wavenumbers up to ``modes``, max |.| = 1.

    Only the retained coefficients are drawn, in a fixed lattice order, so a
    seed names the same continuum function at every resolution.
    """
    lattice = [k for k in itertools.product(range(-modes, modes + 1), repeat=grid.d) if any(k)]
    vals = rng.standard_normal(len(lattice)) + 1j * rng.standard_normal(len(lattice))
    idx = np.ravel_multi_index(tuple(np.array(lattice).T % grid.N), grid.shape)
    coef = np.zeros(grid.n, dtype=complex)
    coef[idx] = vals
    f = grid.ifft(coef).real
    return f / np.max(np.abs(f))


def bump(grid: Grid, center=None, width_cells: float = BUMP_WIDTH_CELLS) -> np.ndarray:
    """Periodised Gaussian of unit mass and width ``width_cells`` grid cells."""
    if center is None:
        center = np.full(grid.d, grid.L / 2)
    sigma = width_cells * grid.h
    r = _torus_distance(grid, center)
    g = np.exp(-0.5 * (r / sigma) ** 2)
    return g / (g.sum() * grid.weight)


def _checked(A: CoefficientField) -> CoefficientField:
    rep = check_ellipticity(A)
    if not rep.ok:
        raise ValueError(f"coefficient field is not elliptic (nu1 = {rep.nu1:.3g})")
    return A


def hermitian_sample(grid: Grid, seed: int = 0, nu1: float = 0.5, nu2: float = 2.0,
                     modes: int = 2, offblock: float = 0.25) -> CoefficientField:
    """Smooth Hermitian field whose pointwise eigenvalues span [nu1, nu2] exactly.

    A random smooth Hermitian field H is mapped affinely so that its extreme
    eigenvalues over the grid become ``nu1`` and ``nu2``.  ``offblock``
    sets the relative size of the off-diagonal entries before rescaling.
    """
    rng = np.random.default_rng(seed)
    m = grid.d + 1
    H = np.zeros((m, m, grid.n), dtype=complex)
    for i in range(m):
        H[i, i] = 1.0 + 0.5 * smooth_field(grid, rng, modes)
        for j in range(i + 1, m):
            z = offblock * (smooth_field(grid, rng, modes) + 1j * smooth_field(grid, rng, modes))
            H[i, j] = z
            H[j, i] = np.conj(z)
    ev = np.linalg.eigvalsh(np.moveaxis(H, -1, 0))
    lo, hi = ev.min(), ev.max()
    eye = np.eye(m)[:, :, None]
    A = nu1 * eye + (nu2 - nu1) * (H - lo * eye) / (hi - lo)
    # exact Hermitian symmetry after floating-point rescaling
    A = 0.5 * (A + np.conj(np.swapaxes(A, 0, 1)))
    return _checked(CoefficientField(grid, A))


def random_elliptic_sample(grid: Grid, seed: int = 0, modes: int = 2,
                           skew: float = 0.4) -> CoefficientField:
    """Smooth complex non-Hermitian field: a Hermitian sample plus a skew part."""
    rng = np.random.default_rng(10_000 + seed)
    base = hermitian_sample(grid, seed, modes=modes).A
    m = grid.d + 1
    for _ in range(RETRY_CAP):
        S = np.zeros_like(base)
        for i in range(m):
            for j in range(m):
                S[i, j] = skew * (smooth_field(grid, rng, modes) + 1j * smooth_field(grid, rng, modes))
        S = 0.5 * (S - np.conj(np.swapaxes(S, 0, 1)))
        # a small non-Hermitian symmetric perturbation; skew parts never spoil coercivity
        E = 0.05 * (smooth_field(grid, rng, modes) + 1j * smooth_field(grid, rng, modes))
        A = CoefficientField(grid, base + S + E * np.eye(m)[:, :, None])
        if check_ellipticity(A).ok:
            return A
    raise RuntimeError("could not sample an elliptic field within the retry cap")


def regular_offblock_sample(grid: Grid, seed: int = 0, delta_target: float = 0.1,
                            alpha: float = 0.0, trials: int = 200) -> CoefficientField:
    """Real nonsymmetric field with smooth off-blocks of small divergence.

    The divergence amplitude is halved until the bilinear scan reports
    ``delta <= delta_target`` for both off-block vectors.
    """
    rng = np.random.default_rng(20_000 + seed)
    d = grid.d
    for _ in range(RETRY_CAP):
        tang = np.zeros((d, d, grid.n))
        for i in range(d):
            tang[i, i] = 1.5 + 0.3 * smooth_field(grid, rng)
        if d == 2:
            tang[0, 1] = tang[1, 0] = 0.2 * smooth_field(grid, rng)
        b = 1.0 + 0.3 * smooth_field(grid, rng)
        c1 = rng.uniform(-0.3, 0.3, d)
        c2 = rng.uniform(-0.3, 0.3, d)
        p1 = np.stack([smooth_field(grid, rng) for _ in range(d)])
        p2 = np.stack([smooth_field(grid, rng) for _ in range(d)])
        eps = 0.3
        for _ in range(40):
            A = from_blocks(grid, tang, c1[:, None] + eps * p1, c2[:, None] + eps * p2, b)
            if not check_ellipticity(A).ok:
                break
            s1 = bilinear_estimate_scan(grid, A.divergence_r1(), alpha, trials, seed)
            s2 = bilinear_estimate_scan(grid, A.divergence_r2(), alpha, trials, seed)
            if max(s1[0], s2[0]) <= delta_target:
                return A
            eps *= 0.5
    raise RuntimeError("could not sample a regular off-block field within the retry cap")


def kkpt_probe(grid: Grid, mass: float, center=None, tangential: float = 1.0,
               b: float = 1.0) -> CoefficientField:
    """Real nonsymmetric field whose off-blocks carry a concentrated divergence.

    ``r2`` is the gradient potential with divergence ``mass * (bump - 1/|T|)``
    (a Gaussian of width four cells minus its torus mean) and ``r1 = -r2``,
    so the symmetric part stays ``diag(tangential, b)`` for every mass.
    """
    h = mass * (bump(grid, center) - 1.0 / grid.L**grid.d)
    hh = grid.fft(h)
    sym = np.zeros(grid.n, dtype=complex)
    nz = grid.kabs > 0
    sym[nz] = -1.0 / grid.kabs[nz] ** 2
    phi = grid.ifft(sym * hh)
    r2 = grid.gradient(phi).real.astype(complex)
    d = grid.d
    return _checked(from_blocks(grid, tangential * np.eye(d), -r2, r2, b))
