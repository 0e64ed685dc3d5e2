"""Numerical checks of the Rellich and weak-form factorization identities.

Every check returns an :class:`IdentityReport` carrying both sides, so the
caller decides on tolerances.  Quadratic forms are always evaluated
pointwise on the grid (spectral gradients, coefficient products) rather
than through the assembled matrices, so the two sides of each identity
go through different code paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coeffs import CoefficientField
from .pencil import PoissonPair, assemble, dtn_from_pencil, poisson_pair
from .profiles import SeparableField

HERMITIAN_TOL = 1e-12
RESOLUTION_TOL = 1e-6
TAIL_TOL = 1e-10


class QuadratureWarning(UserWarning):
    """A time profile is not resolved by the panel quadrature."""


@dataclass
class IdentityReport:
    name: str
    left: complex
    right: complex
    case_id: str = ""
    grid: tuple = ()
    lam: complex = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def abs_residual(self) -> float:
        return float(abs(self.left - self.right))

    @property
    def rel_residual(self) -> float:
        return self.abs_residual / max(abs(self.left), abs(self.right), 1e-30)

    def to_row(self) -> dict:
        d, N, L = self.grid if self.grid else (0, 0, 0.0)
        return {
            "case_id": self.case_id,
            "identity": self.name,
            "d": d,
            "N": N,
            "L": L,
            "lam": float(np.real(self.lam)),
            "left_re": float(np.real(self.left)),
            "left_im": float(np.imag(self.left)),
            "right_re": float(np.real(self.right)),
            "right_im": float(np.imag(self.right)),
            "abs_residual": self.abs_residual,
            "rel_residual": self.rel_residual,
        }


def _grid_tuple(A: CoefficientField) -> tuple:
    g = A.grid
    return (g.d, g.N, float(g.L))


def _pair(A: CoefficientField, lam, pair: PoissonPair | None) -> PoissonPair:
    if pair is not None:
        if pair.T.coeffs is not A and not np.array_equal(pair.T.coeffs.A, A.A):
            raise ValueError("supplied Poisson pair belongs to a different coefficient field")
        if pair.lam != lam:
            raise ValueError(f"supplied Poisson pair has lam = {pair.lam}, expected {lam}")
        return pair
    return poisson_pair(A, lam)


# -- Rellich identities -------------------------------------------------------

def rellich_hermitian(A: CoefficientField, f, lam: float = 0.0, pair: PoissonPair | None = None,
                      case_id: str = "") -> IdentityReport:
    """<A' grad f, grad f> + lam ||f||^2 against ||M_{sqrt b} P_lam f||^2.

    Raises
    ------
    ValueError
        If ``A`` is not Hermitian.
    """
    if A.hermitian_defect() > HERMITIAN_TOL:
        raise ValueError(f"coefficient field is not Hermitian (defect {A.hermitian_defect():.3g})")
    pair = _pair(A, lam, pair)
    g = A.grid
    f = np.asarray(f, dtype=complex)
    left = pair.T.form(f, f)
    right = g.l2_norm(np.sqrt(A.b.real) * (pair.P @ f)) ** 2
    return IdentityReport("rellich_hermitian", complex(left), complex(right), case_id,
                          _grid_tuple(A), complex(lam))


def rellich_general(A: CoefficientField, f, g, lam: complex = 1.0,
                    pair: PoissonPair | None = None, case_id: str = "") -> IdentityReport:
    """<(A' + lam) f, g> against <P f, Lambda_{A*} g> + <P f, conj(r1) . grad g>."""
    pair = _pair(A, lam, pair)
    grid = A.grid
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    left = pair.T.form(f, g)
    Pf = pair.P @ f
    Lam_star = dtn_from_pencil(pair, adjoint=True).matrix
    grad_g = grid.gradient(g)
    r1g = sum(np.conj(A.r1[j]) * grad_g[j] for j in range(grid.d))
    right = grid.inner(Pf, Lam_star @ g) + grid.inner(Pf, r1g)
    return IdentityReport("rellich_general", complex(left), complex(right), case_id,
                          _grid_tuple(A), complex(lam))


# -- weak-form factorization --------------------------------------------------

class SemigroupOrbit:
    """The half-line field ``u(t) = exp(-tP) g`` with ``d_t u = -P u``."""

    def __init__(self, pair: PoissonPair, g, adjoint: bool = False):
        self.grid = pair.grid
        root = pair.root_star if adjoint else pair.root
        self.mu, self.V = root.mu, root.V
        self.Vinv = np.linalg.inv(root.V)
        self.P = root.P
        self.c = self.Vinv @ np.asarray(g, dtype=complex)
        self.rate = float(np.min(self.mu.real[np.abs(self.c) > 0], initial=math.inf))
        self.top = float(np.max(np.abs(self.mu)))
        self.start, self.end = 0.0, math.inf

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (np.exp(-np.outer(t, self.mu)) * self.c) @ self.V.T

    def dt(self, t) -> np.ndarray:
        return -(self(t) @ self.P.T)

    def breakpoints(self) -> list[float]:
        return [0.0]


def _field_breaks(u) -> list[float]:
    return list(u.breakpoints())


def _panel_edges(u, v, order: int, half_line: bool, max_width: float | None):
    """Composite-rule panel edges covering the joint support of u and v."""
    lo = max(u.start, v.start)
    hi = min(u.end, v.end)
    if half_line:
        lo = max(lo, 0.0)
    if not math.isfinite(hi):
        # semigroup orbits: the integrand decays like exp(-2 rate t)
        rates = [w.rate for w in (u, v) if isinstance(w, SemigroupOrbit)]
        rate = max(sum(rates) if len(rates) == 2 else min(rates), 1e-12)
        hi = lo + math.log(1.0 / TAIL_TOL) / rate
    if hi <= lo:
        return np.array([lo, lo])
    breaks = sorted({lo, hi} | {p for p in _field_breaks(u) + _field_breaks(v) if lo < p < hi})
    top = max([getattr(w, "top", 0.0) for w in (u, v)] + [1e-12])
    width = max_width if max_width is not None else min(1.0, 0.5 * order / top)
    edges = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(math.ceil((b - a) / width)))
        edges.extend(np.linspace(a, b, k + 1)[1:])
    return np.asarray(edges)


def _gauss_nodes(edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (b - a) * x + 0.5 * (a + b)
    wt = 0.5 * (b - a) * w
    return t.ravel(), wt.ravel()


def _space_time_form(A: CoefficientField, lam, U, dU, Vv, dV) -> np.ndarray:
    """Pointwise <A grad u, grad v> + lam <u, v> at each time node."""
    g = A.grid
    d = g.d
    GU = np.concatenate([g.gradient(U), dU[None]], axis=0)
    GV = np.concatenate([g.gradient(Vv), dV[None]], axis=0)
    out = np.zeros(U.shape[0], dtype=complex)
    for i in range(d + 1):
        for j in range(d + 1):
            out += g.weight * np.sum(A.A[i, j] * GU[j] * np.conj(GV[i]), axis=-1)
    return out + lam * g.weight * np.sum(U * np.conj(Vv), axis=-1)


def weak_form_identity(A: CoefficientField, u, v, lam: complex = 1.0, half_line: bool = False,
                       pair: PoissonPair | None = None, order: int = 16,
                       max_width: float | None = None, case_id: str = "") -> IdentityReport:
    """Space-time factorization identity for fields u, v.

    Full line::

        int <A grad u, grad v> + lam <u, v> dt = int <(d_t + P) u, M_conj(b) (d_t + P_*) v> dt

    With ``half_line`` the integrals run over t > 0 and the right side gains
    ``<u(0), Lambda_{A*} v(0)>``.

    Parameters
    ----------
    u, v : SeparableField or SemigroupOrbit
        Separable fields need compact time support.  Orbits (half line
        only) are integrated until their product has decayed below
        ``1e-10``.
    order : int
        Gauss-Legendre nodes per panel.
    """
    pair = _pair(A, lam, pair)
    if not half_line and not (math.isfinite(min(u.end, v.end)) and
                              all(isinstance(w, SeparableField) for w in (u, v))):
        raise ValueError("the full-line identity needs compactly supported separable fields")
    edges = _panel_edges(u, v, order, half_line, max_width)
    for w in (u, v):
        if isinstance(w, SeparableField):
            defect = w.resolution_defect(edges, order)
            if defect > RESOLUTION_TOL:
                warnings.warn(f"time profile energy above the panel resolution is {defect:.2g}",
                              QuadratureWarning)
    t, wt = _gauss_nodes(edges, order)
    U, dU = u(t), u.dt(t)
    Vv, dV = v(t), v.dt(t)
    b = A.b
    left = np.sum(wt * _space_time_form(A, lam, U, dU, Vv, dV))
    X = dU + U @ pair.P.T
    Y = dV + Vv @ pair.P_star.T
    g = A.grid
    right = np.sum(wt * g.weight * np.sum(X * b * np.conj(Y), axis=-1))
    boundary = 0.0
    if half_line:
        Lam_star = dtn_from_pencil(pair, adjoint=True).matrix
        u0, v0 = u(0.0)[0], v(0.0)[0]
        boundary = g.inner(u0, Lam_star @ v0)
        right = right + boundary
    return IdentityReport("weak_form_half" if half_line else "weak_form_full", complex(left),
                          complex(right), case_id, _grid_tuple(A), complex(lam),
                          {"panels": len(edges) - 1, "order": order,
                           "boundary_term": complex(boundary)})


# -- norm equivalences --------------------------------------------------------

def norm_equivalence(A: CoefficientField, trials: int = 50, seed: int = 0, lam: float = 0.0,
                     fields=None, pair: PoissonPair | None = None) -> dict:
    """Extreme ratios ``||Lambda f|| / ||grad f||`` and ``(||P f|| + ||f||) / ||f||_{H^1}``.

    Test fields are mean-zero and band-limited; pass ``fields`` (already on
    ``A.grid``) to reuse the same continuum functions across resolutions.

    Returns
    -------
    dict
        ``{"dtn": (low, high), "poisson": (low, high)}``.
    """
    pair = _pair(A, lam, pair)
    g = A.grid
    if fields is None:
        fields = g.random_bandlimited(np.random.default_rng(seed), trials, mean_zero=True)
    Lam = dtn_from_pencil(pair).matrix
    dtn, poi = [], []
    for f in fields:
        grad = math.sqrt(sum(g.l2_norm(c) ** 2 for c in g.gradient(f)))
        dtn.append(g.l2_norm(Lam @ f) / grad)
        poi.append((g.l2_norm(pair.P @ f) + g.l2_norm(f)) / g.sobolev_norm(f, 1.0, homogeneous=False))
    return {"dtn": (float(min(dtn)), float(max(dtn))),
            "poisson": (float(min(poi)), float(max(poi)))}


def refinement_fields(coarse, fine, trials: int = 50, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """The same band-limited test functions sampled on a coarse and a fine grid."""
    fc = coarse.random_bandlimited(np.random.default_rng(seed), trials, mean_zero=True)
    return fc, np.stack([fine.resample(f, coarse) for f in fc])


# -- energy cross-check against the oracle ------------------------------------

def hermitian_energy_check(A: CoefficientField, g, lam: float = 1.0, M: int = 1024,
                           pair: PoissonPair | None = None, case_id: str = "") -> IdentityReport:
    """<Lambda_lam g, g> (pencil) against the oracle extension energy.

    The right side is ``int_0^T <A grad E g, grad E g> + lam ||E g||^2 dt``
    for the discrete cylinder extension, so agreement is up to the oracle's
    O(dt^2) error.
    """
    from .oracle import CylinderSystem, TruncatedCylinder, extension_energy

    pair = _pair(A, lam, pair)
    grid = A.grid
    g = np.asarray(g, dtype=complex)
    left = grid.inner(dtn_from_pencil(pair).matrix @ g, g)
    cyl = TruncatedCylinder.for_pair(pair, M)
    system = CylinderSystem(assemble(A, lam), cyl)
    U = system.solve("dirichlet", g=g)
    right = grid.weight * extension_energy(system, U)
    return IdentityReport("hermitian_energy", complex(left), complex(right), case_id,
                          _grid_tuple(A), complex(lam), {"dt": cyl.dt, "T_max": cyl.T_max})


# -- reporting ----------------------------------------------------------------

def summarize(reports) -> dict:
    """Per-case maximum relative residual."""
    out = {}
    for r in reports:
        out[r.case_id] = max(out.get(r.case_id, 0.0), r.rel_residual)
    return dict(sorted(out.items()))
