"""Quadratic operator pencil, Poisson operators and Dirichlet-Neumann maps.

Substituting ``u(t) = exp(-tP) g`` into ``(A + lam) u = 0`` with
t-independent coefficients gives the quadratic matrix equation

    M_b P^2 - (D1 + D2) P - (A' + lam) = 0,

where ``D1 f = div(r1 f)`` and ``D2 f = r2 . grad f``.  The decaying root
``P`` is built from the stable invariant subspace of the linearization

    [[0, I], [M_b^{-1} K, M_b^{-1} D]] w = mu w,     K = A' + lam,

and ``Q = M_{1/b} (M_{conj b} P_*)^H`` uses the root for the adjoint field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import io as _io
from .coeffs import CoefficientField
from .grid import Grid

SPLIT_TOL = 1e-8
ZERO_TOL = 1e-6
COND_MAX = 1e10


class PencilError(RuntimeError):
    """The stable/unstable eigenvalue split of the linearization failed."""


@dataclass
class TangentialOperator:
    coeffs: CoefficientField
    lam: complex
    Aprime: np.ndarray = field(repr=False)
    D1: np.ndarray = field(repr=False)
    D2: np.ndarray = field(repr=False)

    @property
    def grid(self) -> Grid:
        return self.coeffs.grid

    @property
    def b(self) -> np.ndarray:
        return self.coeffs.b

    @property
    def K(self) -> np.ndarray:
        return self.Aprime + self.lam * np.eye(self.grid.n)

    @property
    def D(self) -> np.ndarray:
        return self.D1 + self.D2

    def form(self, f, g) -> complex:
        """Weak form <A' grad f, grad g> + lam <f, g> built pointwise."""
        gr = self.grid
        Gf, Gg = gr.gradient(f), gr.gradient(g)
        Ap = self.coeffs.tangential
        val = sum(gr.inner(Ap[i, j] * Gf[j], Gg[i]) for i in range(gr.d) for j in range(gr.d))
        return val + self.lam * gr.inner(f, g)


def assemble(A: CoefficientField, lam: complex = 1.0) -> TangentialOperator:
    """Dense matrices for A' = -div(A' grad), D1 = div(r1 .) and D2 = r2 . grad."""
    if np.real(lam) < 0:
        raise ValueError("the shift must satisfy Re(lam) >= 0")
    g = A.grid
    G = [g.diff_matrix(j) for j in range(g.d)]
    Ap = A.tangential
    Aprime = np.zeros((g.n, g.n), dtype=complex)
    for i in range(g.d):
        for j in range(g.d):
            Aprime -= G[i] @ (Ap[i, j][:, None] * G[j])
    D1 = sum(G[j] * A.r1[j][None, :] for j in range(g.d))
    D2 = sum(A.r2[j][:, None] * G[j] for j in range(g.d))
    return TangentialOperator(A, complex(lam), Aprime, D1, D2)


@dataclass
class StableRoot:
    """Decaying root of one pencil together with its eigendecomposition."""

    P: np.ndarray = field(repr=False)
    mu: np.ndarray
    V: np.ndarray = field(repr=False)
    cond: float
    zero_mode: bool


def stable_root(T: TangentialOperator, split_tol: float = SPLIT_TOL,
                zero_tol: float = ZERO_TOL, cond_max: float = COND_MAX) -> StableRoot:
    """Solve the pencil by linearization and select the Re(mu) > 0 branch.

    With ``lam == 0`` the constants are an exact kernel of the pencil; the
    (Jordan) pair of near-zero eigenvalues is discarded and the constant
    vector is adjoined with eigenvalue 0.
    """
    n = T.grid.n
    Z, I = np.zeros((n, n)), np.eye(n)
    # M_b is diagonal, so the generalized problem reduces to a standard one
    inv_b = (1.0 / T.b)[:, None]
    companion = np.block([[Z, I], [inv_b * T.K, inv_b * T.D]])
    mu, W = sla.eig(companion)
    if not np.all(np.isfinite(mu)):
        raise PencilError("linearization has infinite eigenvalues")
    rho = float(np.max(np.abs(mu)))
    zero_mode = T.lam == 0
    keep = np.ones(mu.size, dtype=bool)
    if zero_mode:
        near = np.abs(mu) < zero_tol * rho
        if near.sum() > 2 or near.sum() == 0:
            raise PencilError(f"expected a double zero eigenvalue, found {near.sum()} near zero")
        keep = ~near
    amb = keep & (np.abs(mu.real) < split_tol * rho)
    if amb.any():
        raise PencilError(f"ambiguous eigenvalue split: {amb.sum()} eigenvalues with "
                          f"|Re mu| < {split_tol:g} * spectral radius")
    sel = keep & (mu.real > 0)
    want = n - 1 if zero_mode else n
    if sel.sum() != want:
        raise PencilError(f"stable subspace has dimension {sel.sum()}, expected {want}")
    X = W[:n, sel]
    m = mu[sel]
    if zero_mode:
        X = np.concatenate([np.ones((n, 1)) / np.sqrt(n), X], axis=1)
        m = np.concatenate([[0.0], m])
    X = X / np.linalg.norm(X, axis=0)
    cond = float(np.linalg.cond(X))
    if cond > cond_max:
        raise PencilError(f"stable subspace is rank deficient (condition number {cond:.3g})")
    # P = X diag(m) X^{-1}
    P = np.linalg.solve(X.T, (X * m).T).T
    order = np.argsort(m.real)
    return StableRoot(P, m[order], X[:, order], cond, zero_mode)


@dataclass
class PoissonPair:
    """Generators P (Poisson operator) and Q, with spectral data for both."""

    T: TangentialOperator
    T_star: TangentialOperator
    root: StableRoot
    root_star: StableRoot
    Q: np.ndarray = field(repr=False)

    @property
    def lam(self) -> complex:
        return self.T.lam

    @property
    def grid(self) -> Grid:
        return self.T.grid

    @property
    def P(self) -> np.ndarray:
        return self.root.P

    @property
    def P_star(self) -> np.ndarray:
        return self.root_star.P

    @property
    def b(self) -> np.ndarray:
        return self.T.b

    @property
    def spectrum(self) -> np.ndarray:
        return self.root.mu

    def spectral_gap(self) -> float:
        """Smallest Re(mu) over P and P_*, ignoring an exact zero mode."""
        vals = []
        for r in (self.root, self.root_star):
            mu = r.mu[1:] if r.zero_mode else r.mu
            vals.append(np.min(mu.real))
        return float(min(vals))

    def min_re_spectrum(self) -> float:
        return float(np.min(self.root.mu.real))

    def sector_angle(self) -> float:
        """Largest |arg mu| over the nonzero spectrum of P."""
        mu = self.root.mu[1:] if self.root.zero_mode else self.root.mu
        return float(np.max(np.abs(np.angle(mu))))

    def sector_margin(self) -> float:
        return float(np.pi / 2 - self.sector_angle())

    def spectral_radius(self) -> float:
        return float(max(np.max(np.abs(self.root.mu)), np.max(np.abs(self.root_star.mu))))

    def factorization_residual(self) -> float:
        """||M_b Q P - (A' + lam)|| / ||A' + lam||."""
        K = self.T.K
        return float(np.linalg.norm(self.b[:, None] * (self.Q @ self.P) - K) / np.linalg.norm(K))

    def full_factorization_residual(self, mu) -> float:
        """Residual of A_lam = -M_b (d_t - Q)(d_t + P) on v exp(-mu t), all v at once."""
        T = self.T
        n = self.grid.n
        I = np.eye(n)
        lhs = T.K + mu * T.D - mu**2 * np.diag(self.b)
        rhs = self.b[:, None] * ((mu * I + self.Q) @ (self.P - mu * I))
        return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))

    def pencil_residual(self) -> float:
        T = self.T
        P = self.P
        res = self.b[:, None] * (P @ P) - T.D @ P - T.K
        return float(np.linalg.norm(res) / np.linalg.norm(T.K))

    def report_row(self, case_id: str) -> dict:
        return {
            "case_id": case_id,
            "N": self.grid.N,
            "lam": float(np.real(self.lam)),
            "residual": self.factorization_residual(),
            "min_re_spectrum": self.min_re_spectrum(),
            "sector_angle": self.sector_angle(),
        }

    def export(self) -> dict:
        return {
            "lam": [float(np.real(self.lam)), float(np.imag(self.lam))],
            "P": _io.array_to_json(self.P),
            "Q": _io.array_to_json(self.Q),
            "spectrum_P": _io.array_to_json(self.root.mu),
            "spectrum_P_star": _io.array_to_json(self.root_star.mu),
        }


def q_from_adjoint_root(b: np.ndarray, P_star: np.ndarray) -> np.ndarray:
    """Q = M_{1/b} (M_{conj b} P_*)^H."""
    return (1.0 / b)[:, None] * (np.conj(b)[:, None] * P_star).conj().T


def solve_pencil(T: TangentialOperator, **kw) -> PoissonPair:
    """Poisson pair (P, Q) for the assembled operator and its adjoint."""
    A = T.coeffs
    T_star = assemble(A.adjoint(), np.conj(T.lam))
    root = stable_root(T, **kw)
    root_star = stable_root(T_star, **kw)
    return PoissonPair(T, T_star, root, root_star, q_from_adjoint_root(T.b, root_star.P))


def poisson_pair(A: CoefficientField, lam: complex = 1.0, **kw) -> PoissonPair:
    return solve_pencil(assemble(A, lam), **kw)


@dataclass
class DtNMap:
    matrix: np.ndarray = field(repr=False)
    provenance: str
    lam: complex
    diagnostics: dict = field(default_factory=dict)

    def apply(self, g) -> np.ndarray:
        return self.matrix @ g

    def hermitian_defect(self) -> float:
        M = self.matrix
        return float(np.linalg.norm(M - M.conj().T) / np.linalg.norm(M))

    def export(self) -> dict:
        return {"provenance": self.provenance,
                "lam": [float(np.real(self.lam)), float(np.imag(self.lam))],
                "matrix": _io.array_to_json(self.matrix)}


def dtn_from_pencil(pair: PoissonPair, adjoint: bool = False) -> DtNMap:
    """Lambda = M_b P - M_{r2} . grad (or the same for the adjoint field)."""
    T, root = (pair.T_star, pair.root_star) if adjoint else (pair.T, pair.root)
    return DtNMap(T.b[:, None] * root.P - T.D2, "pencil", T.lam)


def dtn_adjoint_check(A: CoefficientField, lam: complex = 1.0) -> float:
    """||Lambda(A)^H - Lambda(A^*)|| / ||Lambda(A)||."""
    pair = poisson_pair(A, lam)
    Lam = dtn_from_pencil(pair).matrix
    Lam_star = dtn_from_pencil(pair, adjoint=True).matrix
    return float(np.linalg.norm(Lam.conj().T - Lam_star) / np.linalg.norm(Lam))


def principal_sqrt(M: np.ndarray, kernel_tol: float = 1e-8) -> np.ndarray:
    """Principal square root via eigendecomposition, branch cut on the negative axis."""
    ev, V = np.linalg.eig(M)
    scale = max(float(np.max(np.abs(ev))), 1.0)
    if np.any(ev.real < -kernel_tol * scale):
        raise ValueError("operator is not sectorial: eigenvalue with negative real part")
    root = np.sqrt(ev.astype(complex))
    root[np.abs(ev) < kernel_tol * scale] = 0.0
    return np.linalg.solve(V.T, (V * root).T).T


def kato_check(T: TangentialOperator, trials: int = 50, seed: int = 0,
               return_sqrt: bool = False, fields=None):
    """Range of ||sqrt(A') f|| / ||grad f|| over random mean-zero fields.

    ``fields`` overrides the random draw, e.g. to reuse the same functions
    across resolutions.
    """
    g = T.grid
    S = principal_sqrt(T.Aprime)
    if fields is None:
        fs = g.random_bandlimited(np.random.default_rng(seed), trials, mean_zero=True)
    else:
        fs = np.asarray(fields, dtype=complex)
    ratios = np.array([g.l2_norm(S @ f) / np.sqrt(sum(g.l2_norm(c) ** 2 for c in g.gradient(f)))
                       for f in fs])
    out = (float(ratios.min()), float(ratios.max()))
    return (out, S) if return_sqrt else out
