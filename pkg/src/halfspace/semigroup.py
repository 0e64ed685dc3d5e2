"""Evaluation of exp(-tP), exp(-tQ) and quantitative semigroup estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .coeffs import bilinear_estimate_scan, check_ellipticity
from .pencil import COND_MAX, PoissonPair, StableRoot

DEFAULT_T_GRID = np.logspace(-3, 3, 61)


class _RootExp:
    """exp(-t P) for one stable root, by eigen-expansion or scaling and squaring."""

    def __init__(self, root: StableRoot, cond_max: float = COND_MAX):
        self.P = root.P
        self.mu = root.mu
        self.V = root.V
        self.strategy = "eigen" if root.cond <= cond_max else "expm"
        self.Vinv = np.linalg.inv(root.V) if self.strategy == "eigen" else None

    def matrix(self, t: float) -> np.ndarray:
        if self.strategy == "eigen":
            return (self.V * np.exp(-t * self.mu)) @ self.Vinv
        return sla.expm(-t * self.P)

    def apply(self, t: float, f) -> np.ndarray:
        if self.strategy == "eigen":
            return self.V @ (np.exp(-t * self.mu) * (self.Vinv @ f))
        return sla.expm(-t * self.P) @ f


class SemigroupEvaluator:
    """Applies the semigroups generated by ``-P`` and ``-Q`` of a Poisson pair.

    The eigen-factors are cached at construction.  If the eigenvector
    matrix is worse conditioned than ``cond_max`` every evaluation falls
    back to scaling and squaring on ``-tP``.
    """

    def __init__(self, pair: PoissonPair, cond_max: float = COND_MAX):
        self.pair = pair
        self._p = _RootExp(pair.root, cond_max)
        self._p_star = _RootExp(pair.root_star, cond_max)

    @property
    def strategy(self) -> str:
        return self._p.strategy

    @property
    def grid(self):
        return self.pair.grid

    def matrix(self, t: float) -> np.ndarray:
        _check_time(t)
        return self._p.matrix(t)

    def star_matrix(self, t: float) -> np.ndarray:
        _check_time(t)
        return self._p_star.matrix(t)

    def q_matrix(self, t: float) -> np.ndarray:
        """exp(-tQ) = M_{1/b} exp(-t P_*)^H M_b."""
        b = self.pair.b
        return (1.0 / b)[:, None] * (self.star_matrix(t).conj().T * b[None, :])

    def evaluate(self, t: float, f) -> np.ndarray:
        _check_time(t)
        f = np.asarray(f, dtype=complex)
        if t == 0:
            return f.copy()
        return self._p.apply(t, f)

    def q_evaluate(self, t: float, f) -> np.ndarray:
        _check_time(t)
        f = np.asarray(f, dtype=complex)
        if t == 0:
            return f.copy()
        b = self.pair.b
        return self._apply_star_adjoint(t, b * f) / b

    def _apply_star_adjoint(self, t: float, f) -> np.ndarray:
        r = self._p_star
        if r.strategy == "eigen":
            # (V e V^{-1})^H f = V^{-H} conj(e) V^H f
            return r.Vinv.conj().T @ (np.exp(-t * np.conj(r.mu)) * (r.V.conj().T @ f))
        return sla.expm(-t * r.P).conj().T @ f

    def symmetrized_matrix(self, t: float) -> np.ndarray:
        """M_{sqrt b} exp(-tP) M_{1/sqrt b} (b real positive)."""
        sb = np.sqrt(self.pair.b)
        return sb[:, None] * self.matrix(t) / sb[None, :]

    # spectral data in eigen coordinates, used by the closed-form integrals
    def modal(self):
        if self._p.strategy != "eigen":
            raise RuntimeError("closed-form spectral integrals need a well-conditioned eigenbasis")
        return self._p.mu, self._p.V, self._p.Vinv


def _check_time(t: float) -> None:
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")


# -- estimates ----------------------------------------------------------------

@dataclass
class DecayReport:
    t: np.ndarray
    norms: dict = field(default_factory=dict)
    square_function: list = field(default_factory=list)

    def to_rows(self, case_id: str) -> list[dict]:
        rows = []
        for kind, vals in self.norms.items():
            for t, v in zip(self.t, vals):
                rows.append({"case_id": case_id, "t": float(t), "norm_kind": kind, "value": float(v)})
        for i, v in enumerate(self.square_function):
            rows.append({"case_id": case_id, "t": math.inf, "norm_kind": f"square_function[{i}]",
                         "value": float(v)})
        return rows


def _opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def measure_decay(E: SemigroupEvaluator, f_set=(), t_grid=DEFAULT_T_GRID,
                  symmetrize: bool | None = None) -> DecayReport:
    """Exact operator norms of the semigroup and its smoothing quantities on ``t_grid``.

    Kinds: ``L2`` = ||e^{-tP}||, ``analytic`` = t ||P e^{-tP}||,
    ``H^0.5`` / ``H^1`` = t^beta ||e^{-tP}||_{L2 -> H^beta}, and ``sym_L2``
    = ||M_{sqrt b} e^{-tP} M_{1/sqrt b}|| when b is real and positive.
    """
    P = E.pair.P
    g = E.grid
    b = E.pair.b
    if symmetrize is None:
        symmetrize = bool(np.all(np.abs(b.imag) == 0) and np.all(b.real > 0))
    D_half = g.abs_derivative_matrix(0.5)
    D_one = g.abs_derivative_matrix(1.0)
    t_grid = np.asarray(t_grid, dtype=float)
    kinds = ["L2", "analytic", "H^0.5", "H^1"] + (["sym_L2"] if symmetrize else [])
    norms = {k: np.empty(t_grid.size) for k in kinds}
    sb = np.sqrt(b.real) if symmetrize else None
    for i, t in enumerate(t_grid):
        M = E.matrix(t)
        norms["L2"][i] = _opnorm(M)
        norms["analytic"][i] = t * _opnorm(P @ M)
        norms["H^0.5"][i] = np.sqrt(t) * _opnorm(D_half @ M)
        norms["H^1"][i] = t * _opnorm(D_one @ M)
        if symmetrize:
            norms["sym_L2"][i] = _opnorm(sb[:, None] * M / sb[None, :])
    sq = [square_function(E, f, 0.0) for f in f_set]
    return DecayReport(t_grid, norms, sq)


def analyticity_constants(E: SemigroupEvaluator, t_grid=DEFAULT_T_GRID) -> dict:
    """Suprema of t||P e^{-tP}|| and t^beta ||e^{-tP}||_{L2->H^beta}, with arg-sup times."""
    rep = measure_decay(E, (), t_grid, symmetrize=False)
    out = {}
    for kind in ("analytic", "H^0.5", "H^1"):
        vals = rep.norms[kind]
        i = int(np.argmax(vals))
        out[kind] = (float(vals[i]), float(rep.t[i]))
    return out


def _gram_half(E: SemigroupEvaluator, V: np.ndarray) -> np.ndarray:
    """Gram matrix <|D| v_i, v_j> of the eigenvectors (homogeneous H^{1/2})."""
    g = E.grid
    DV = g.abs_derivative_matrix(1.0) @ V
    return g.weight * (V.conj().T @ DV).T


def _modal_energy(E: SemigroupEvaluator, f, lam: float, T: float | None):
    mu, V, Vinv = E.modal()
    c = Vinv @ np.asarray(f, dtype=complex)
    if E.pair.root.zero_mode:
        # the constant mode carries no H^{1/2} energy
        c = c.copy()
        c[0] = 0.0
    G = _gram_half(E, V)
    z = mu[:, None] + np.conj(mu)[None, :] + 2 * lam
    W = c[:, None] * np.conj(c)[None, :] * G
    active = W != 0
    if T is None:
        if np.any(z.real[active] <= 0):
            return math.inf
        kern = np.where(active, 1.0 / np.where(active, z, 1.0), 0.0)
    else:
        small = np.abs(z) * T < 1e-12
        zs = np.where(small, 1.0, z)
        kern = np.where(small, T, -np.expm1(-T * zs) / zs)
    return float(np.real(np.sum(W * kern)))


def square_function(E: SemigroupEvaluator, f, lam: float = 0.0) -> float:
    """int_0^inf ||e^{-tP - lam t} f||^2_{H^{1/2}} dt in closed form.

    Returns ``inf`` when some exponent mu_i + conj(mu_j) + 2 lam has
    nonpositive real part.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return _modal_energy(E, f, lam, None)


def half_energy(E: SemigroupEvaluator, f, T: float) -> float:
    """int_0^T ||e^{-sP} f||^2_{H^{1/2}} ds in closed form."""
    return _modal_energy(E, f, 0.0, T)


def square_function_quadrature(E: SemigroupEvaluator, f, lam: float = 0.0,
                               t_max: float | None = None, panels: int = 400,
                               order: int = 16) -> float:
    """Gauss-Legendre t-quadrature of the square function (cross-check path)."""
    g = E.grid
    if t_max is None:
        t_max = 40.0 / max(E.pair.spectral_gap() + lam, 1e-3)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate([[0.0], np.geomspace(1e-6, t_max, panels)])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        for xi, wi in zip(x, w):
            t = 0.5 * (b - a) * xi + 0.5 * (a + b)
            u = E.evaluate(t, f) * np.exp(-lam * t)
            total += 0.5 * (b - a) * wi * g.sobolev_norm(u, 0.5) ** 2
    return float(total)


def gronwall_energy_check(E: SemigroupEvaluator, f, T: float, delta: float | None = None,
                          C4: float | None = None, nu1: float | None = None,
                          trials: int = 200, seed: int = 0) -> float:
    """Relative residual (lhs - rhs) / rhs of the weighted energy inequality

        ||M_{sqrt b} e^{-TP} f||^2 + nu1 int_0^T ||e^{-sP} f||^2_{H^{1/2}} ds
            <= 2 exp((2 C4 + delta) T / nu1) ||M_{sqrt b} f||^2.

    Missing constants are fitted: (delta, C4) from the bilinear scan of
    div r2 at alpha = 0, nu1 from the ellipticity report.  A value <= 0
    means the inequality holds.
    """
    A = E.pair.T.coeffs
    if np.any(A.r2.imag != 0) or np.any(A.b.imag != 0):
        raise ValueError("the energy inequality needs real r2 and b")
    if delta is None or C4 is None:
        d_fit, c_fit = bilinear_estimate_scan(A.grid, A.divergence_r2(), 0.0, trials, seed)
        delta = d_fit if delta is None else delta
        C4 = c_fit if C4 is None else C4
    if nu1 is None:
        nu1 = check_ellipticity(A).nu1
    g = E.grid
    sb = np.sqrt(A.b.real)
    f = np.asarray(f, dtype=complex)
    lhs = g.l2_norm(sb * E.evaluate(T, f)) ** 2 + nu1 * half_energy(E, f, T)
    rhs = 2 * math.exp((2 * C4 + delta) * T / nu1) * g.l2_norm(sb * f) ** 2
    return float((lhs - rhs) / rhs)
