"""Direct truncated-cylinder solver used as ground truth.

The weak form of ``(A + lam) u = F`` on ``T^d x [0, T_max]`` is discretized
with continuous piecewise-linear elements on a uniform t-mesh (second-order
central differences in the interior) and spectral matrices in x.  The far
end carries a homogeneous Dirichlet condition.  The resulting
block-tridiagonal system is factored once with a sparse LU.

For u, v on the cylinder the discrete form is

    a(u, v) = int <K u, v> - <D1 u', v> + <D2 u, v'> + <M_b u', v'> dt,

so that the residual of the first row is the discrete conormal flux
``-(M_b d_t u + r2 . grad u)`` at t = 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeffs import CoefficientField
from .pencil import DtNMap, PoissonPair, TangentialOperator, assemble

MIN_STEPS = 64


class OracleWarning(UserWarning):
    """Two readings of an oracle quantity disagree beyond the expected error."""


@dataclass(frozen=True)
class TruncatedCylinder:
    """t-interval [0, T_max] with ``M`` uniform steps (M + 1 nodes)."""

    T_max: float
    M: int

    def __post_init__(self):
        if self.M < MIN_STEPS:
            raise ValueError(f"need at least {MIN_STEPS} t-steps, got {self.M}")
        if not self.T_max > 0:
            raise ValueError("T_max must be positive")

    @property
    def dt(self) -> float:
        return self.T_max / self.M

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T_max, self.M + 1)

    @classmethod
    def for_pair(cls, pair: PoissonPair, M: int, gap_multiple: float = 8.0) -> TruncatedCylinder:
        return cls(gap_multiple / pair.spectral_gap(), M)


def _element_matrices(M: int, dt: float):
    """P1 mass, stiffness and advection (int phi_i phi_m') matrices on M+1 nodes."""
    n = M + 1
    main = np.full(n, 2 * dt / 3)
    main[[0, -1]] = dt / 3
    mass = sp.diags([np.full(n - 1, dt / 6), main, np.full(n - 1, dt / 6)], [-1, 0, 1])
    smain = np.full(n, 2 / dt)
    smain[[0, -1]] = 1 / dt
    stiff = sp.diags([np.full(n - 1, -1 / dt), smain, np.full(n - 1, -1 / dt)], [-1, 0, 1])
    cmain = np.zeros(n)
    cmain[0], cmain[-1] = -0.5, 0.5
    adv = sp.diags([np.full(n - 1, -0.5), cmain, np.full(n - 1, 0.5)], [-1, 0, 1])
    return mass.tocsr(), stiff.tocsr(), adv.tocsr()


class CylinderSystem:
    """Assembled block-tridiagonal cylinder operator for one coefficient field."""

    def __init__(self, T: TangentialOperator, cyl: TruncatedCylinder):
        self.T = T
        self.cyl = cyl
        self.n = T.grid.n
        mass, stiff, adv = _element_matrices(cyl.M, cyl.dt)
        B = np.diag(T.b)
        K = T.K
        # block (i, m) = mass_im K - adv_im D1 + adv_mi D2 + stiff_im B
        self.matrix = (sp.kron(mass, K) - sp.kron(adv, T.D1) + sp.kron(adv.T, T.D2)
                       + sp.kron(stiff, B)).tocsr()
        self.mass_t = mass
        self._lu = {}

    def _indices(self, nodes) -> np.ndarray:
        n = self.n
        return (np.asarray(nodes)[:, None] * n + np.arange(n)[None, :]).ravel()

    def _factor(self, kind: str):
        if kind not in self._lu:
            M = self.cyl.M
            free = np.arange(1, M) if kind == "dirichlet" else np.arange(0, M)
            idx = self._indices(free)
            sub = self.matrix[idx][:, idx].tocsc()
            try:
                lu = spla.splu(sub)
            except RuntimeError as exc:
                raise RuntimeError(f"cylinder factorization failed: {exc}") from exc
            self._lu[kind] = (free, idx, lu)
        return self._lu[kind]

    def load(self, F) -> np.ndarray:
        """Consistent-mass load vector from nodal samples F, shape (M+1, n, ...)."""
        F = np.asarray(F, dtype=complex)
        flat = F.reshape(self.cyl.M + 1, -1)
        return (self.mass_t @ flat).reshape(F.shape)

    def solve(self, kind: str, g=None, F=None, nrhs_shape=()) -> np.ndarray:
        """Nodal solution, shape (M+1, n, *nrhs_shape)."""
        M, n = self.cyl.M, self.n
        free, idx, lu = self._factor(kind)
        shape = (M + 1, n) + tuple(nrhs_shape)
        rhs = np.zeros(shape, dtype=complex)
        if F is not None:
            rhs += self.load(np.broadcast_to(F, shape))
        u = np.zeros(shape, dtype=complex)
        if kind == "dirichlet":
            if g is not None:
                u[0] = g
                lift = self.matrix[:, :n] @ np.asarray(u[0]).reshape(n, -1)
                rhs -= lift.reshape(shape)
        elif kind == "neumann":
            if g is not None:
                rhs[0] += g
        else:
            raise ValueError(f"unknown problem kind {kind!r}")
        sol = lu.solve(rhs[free].reshape(len(free) * n, -1))
        u[free] = sol.reshape((len(free), n) + tuple(nrhs_shape))
        return u

    def flux(self, u) -> np.ndarray:
        """Row-0 variational residual: the discrete conormal datum of ``u``."""
        n = self.n
        rows = self.matrix[:n]
        flat = np.asarray(u).reshape((self.cyl.M + 1) * n, -1)
        return (rows @ flat).reshape(np.asarray(u).shape[1:])


def direct_extension(A: CoefficientField, g, lam: complex, cyl: TruncatedCylinder,
                     system: CylinderSystem | None = None) -> np.ndarray:
    """Discrete A_lam-extension of ``g``: nodal values, shape (M+1, n)."""
    system = system or CylinderSystem(assemble(A, lam), cyl)
    return system.solve("dirichlet", g=np.asarray(g, dtype=complex))


def dtn_from_extension(A: CoefficientField, lam: complex, cyl: TruncatedCylinder,
                       system: CylinderSystem | None = None) -> DtNMap:
    """DtN matrix read from the variational flux of the discrete extensions.

    A second reading takes the one-sided second-order difference of the
    extension at t = 0.  Both carry O(dt^2) errors scaled by the squared
    top frequency, so a relative mismatch above ``10 (||Lambda|| dt)^2``
    emits an :class:`OracleWarning`; the mismatch is kept in ``diagnostics``.
    """
    system = system or CylinderSystem(assemble(A, lam), cyl)
    T = system.T
    n = system.n
    U = system.solve("dirichlet", g=np.eye(n), nrhs_shape=(n,))
    Lam = system.flux(U)
    dt = cyl.dt
    du0 = (-3 * U[0] + 4 * U[1] - U[2]) / (2 * dt)
    Lam_fd = -(T.b[:, None] * du0) - T.D2 @ U[0]
    mismatch = float(np.linalg.norm(Lam - Lam_fd, 2) / np.linalg.norm(Lam, 2))
    bound = 10 * (np.linalg.norm(Lam, 2) * dt) ** 2
    flagged = mismatch > bound
    if flagged:
        warnings.warn(f"DtN readings differ by {mismatch:.3g} (bound {bound:.3g})", OracleWarning)
    return DtNMap(Lam, "extension-oracle", T.lam,
                  {"reading_mismatch": mismatch, "mismatch_bound": bound, "flagged": flagged,
                   "dt": dt, "T_max": cyl.T_max})


def direct_bvp(A: CoefficientField, F, g, kind: str, lam: complex, cyl: TruncatedCylinder,
               system: CylinderSystem | None = None) -> np.ndarray:
    """Ground-truth solution of the Dirichlet or Neumann problem on the cylinder.

    ``F`` is either ``None``, an array of nodal samples (M+1, n), or a
    callable ``F(t) -> (n,)``; ``g`` is the Dirichlet trace or conormal datum.
    """
    system = system or CylinderSystem(assemble(A, lam), cyl)
    if callable(F):
        F = np.stack([F(t) for t in cyl.t])
    return system.solve(kind, g=None if g is None else np.asarray(g, dtype=complex), F=F)


def extension_energy(system: CylinderSystem, u, v=None) -> complex:
    """Discrete form a(u, v) / w for nodal fields u, v (x-weight divided out)."""
    v = u if v is None else v
    flat_u = np.asarray(u).reshape(-1)
    flat_v = np.asarray(v).reshape(-1)
    return complex(np.vdot(flat_v, system.matrix @ flat_u))
