"""Mild-solution solvers for the Dirichlet and Neumann problems on the half-space.

For ``(A + lam) u = F`` in t > 0 the mild solution is

    u(t) = exp(-tP) g + int_0^t exp(-(t-s)P) m(s) ds,
    m(s) = int_s^inf exp(-(tau-s)Q) M_{1/b} F(tau) dtau,

and the Neumann problem replaces ``g`` by ``Lambda^{-1}(g + M_b m(0))``.

Everything is evaluated in eigen-coordinates of P and Q.  With
``Q = W diag(nu) W^{-1}``, ``W^{-1} M_{1/b} = V_*^H``, so each separable
term ``f psi(tau)`` of F contributes ``V_*^H f`` times scalar integrals.
Those integrals are computed on Gauss-Legendre panels by a backward
recurrence (for m) and a forward recurrence (for u); exponentials only
ever appear with nonpositive real exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .coeffs import CoefficientField, check_symmetry_condition
from .pencil import PoissonPair, dtn_from_pencil, poisson_pair
from .profiles import Bump, PowerLaw, SeparableField

PANEL_ORDER = 16
TAIL_BUDGET = 1e-8
PLAIN_SOLVE_TOL = 1e-8
RANGE_TOL = 1e-6
TIKHONOV_SCALE = 1e-12
MAX_TAIL_GAPS = 4000.0


class TailBudgetError(RuntimeError):
    """The truncated Duhamel tail cannot be bounded within the budget."""


class RangeConditionError(RuntimeError):
    """The Neumann datum is not in the numerical range of the DtN map."""


@dataclass
class BVPProblem:
    """A Dirichlet or Neumann problem with separable forcing.

    Attributes
    ----------
    coeffs : CoefficientField
    kind : str
        ``"dirichlet"`` or ``"neumann"``.
    g : ndarray
        Dirichlet trace or conormal datum ``-(b d_t u + r2 . grad u)`` at t = 0.
    F : SeparableField
        Forcing; compactly supported terms or terms with a declared tail.
    lam : float
        Shift, ``lam >= 0``.
    """

    coeffs: CoefficientField
    kind: str
    g: np.ndarray
    F: SeparableField
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise ValueError(f"problem kind must be dirichlet or neumann, got {self.kind!r}")
        if np.real(self.lam) < 0:
            raise ValueError("the shift must be nonnegative")
        self.g = np.asarray(self.g, dtype=complex)
        if self.g.shape != (self.coeffs.grid.n,):
            raise ValueError("boundary datum does not match the grid")
        if self.F.grid != self.coeffs.grid:
            raise ValueError("forcing lives on a different grid")


@dataclass
class BVPSolution:
    """Samples ``u(t_k)`` with derivative, tail term and norm traces."""

    t: np.ndarray
    u: np.ndarray = field(repr=False)
    du: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    grid: object = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def l2(self) -> np.ndarray:
        return np.sqrt(self.grid.weight) * np.linalg.norm(self.u, axis=-1)

    @property
    def grad_l2(self) -> np.ndarray:
        G = self.grid.gradient(self.u)
        return np.sqrt(self.grid.weight * np.sum(np.abs(G) ** 2, axis=(0, -1)))

    def to_rows(self, case_id: str) -> list[dict]:
        g = self.grid
        lam = float(np.real(self.diagnostics.get("lam", 0.0)))
        return [{"case_id": case_id, "d": g.d, "N": g.N, "lam": lam, "t": float(t),
                 "u_l2": float(a), "grad_u_l2": float(b)}
                for t, a, b in zip(self.t, self.l2, self.grad_l2)]


# -- modal Duhamel machinery --------------------------------------------------

class _Modal:
    """Eigen-coordinates of P and Q for one Poisson pair."""

    def __init__(self, pair: PoissonPair):
        self.pair = pair
        r, rs = pair.root, pair.root_star
        self.mu, self.V = r.mu, r.V
        self.Vinv = np.linalg.inv(r.V)
        self.nu = np.conj(rs.mu)
        b = pair.b
        Vs_inv = np.linalg.inv(rs.V)
        self.W = Vs_inv.conj().T / b[:, None]
        self.Vs_H = rs.V.conj().T
        # P-coordinates of the Q-eigenvectors
        self.X = self.Vinv @ self.W
        self.rho = pair.spectral_radius()
        self.gap = pair.spectral_gap()
        self.kappa = float(r.cond)
        self.W_norm = float(np.linalg.norm(self.W, 2))

    def forcing_coefficients(self, F: SeparableField) -> np.ndarray:
        """V_*^H f_m per term, shape (terms, n); round-off in undamped modes dropped."""
        c = F.spatial @ self.Vs_H.T
        if c.size:
            still = self.nu.real <= 1e-12 * self.rho
            scale = np.max(np.abs(c), axis=1, keepdims=True)
            c[:, still] = np.where(np.abs(c[:, still]) <= 1e-13 * scale, 0.0, c[:, still])
        return c


def _tail_bound(modal: _Modal, F: SeparableField, c: np.ndarray, T: float, s: float) -> float:
    """Bound on ||m(s) - m_T(s)|| from dropping the forcing beyond T."""
    if not F.terms:
        return 0.0
    sup = F.tail_sup(T)
    integ = F.tail_integral(T)
    rate = modal.nu.real
    total = np.zeros(modal.nu.size)
    for m in range(len(F.terms)):
        if sup[m] == 0:
            continue
        damp = np.exp(-rate * max(T - s, 0.0))
        with np.errstate(divide="ignore"):
            per = np.minimum(integ[m], np.where(rate > 0, sup[m] / rate, math.inf))
        total = total + np.abs(c[m]) * damp * np.where(np.abs(c[m]) > 0, per, 0.0)
    return float(modal.W_norm * np.linalg.norm(total))


def _forcing_l1(F: SeparableField, T: float, order: int = PANEL_ORDER) -> float:
    """int_0^T ||F(tau)|| dtau by panel quadrature."""
    if F.is_zero or T <= 0:
        return 0.0
    edges = _uniform_edges([0.0, T] + [p for p in F.breakpoints() if 0 < p < T], 1.0)
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * x + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.sum(w * np.sqrt(F.grid.weight) * np.linalg.norm(F(t), axis=-1))
    return float(total)


def _uniform_edges(points, width: float) -> np.ndarray:
    pts = sorted(set(float(p) for p in points))
    edges = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        k = max(1, int(math.ceil((b - a) / width - 1e-12)))
        edges.extend(np.linspace(a, b, k + 1)[1:])
    return np.asarray(edges)


def choose_horizon(modal: _Modal, F: SeparableField, c: np.ndarray, t_end: float,
                   budget: float = TAIL_BUDGET) -> tuple[float, float]:
    """Smallest tried T_max whose tail bound meets ``budget * ||F||_{L1 L2}``.

    Returns ``(T_max, bound)``.
    """
    if F.is_zero:
        return t_end, 0.0
    T = max(t_end, F.end) if math.isfinite(F.end) else None
    if T is not None:
        return T, 0.0
    step = 10.0 / modal.gap
    k = 1
    while k * step <= MAX_TAIL_GAPS / modal.gap:
        T = t_end + k * step
        bound = _tail_bound(modal, F, c, T, t_end)
        norm = _forcing_l1(F, T)
        if bound <= budget * norm:
            return T, bound
        k *= 2
    raise TailBudgetError(f"tail bound {bound:.3g} exceeds {budget:g} * ||F||_L1L2 = "
                          f"{budget * norm:.3g} even at T_max = {T:.4g}")


def panel_width(modal: _Modal, cap: float = 1.0) -> float:
    """min(1, 1/gap, 16/rho): the last term keeps Gauss-16 accurate for top modes."""
    return min(cap, 1.0 / modal.gap, PANEL_ORDER / modal.rho)


def _tail_recurrence(modal: _Modal, F: SeparableField, c: np.ndarray, edges: np.ndarray,
                     order: int):
    """Tail coefficients at panel edges and at interior outer nodes.

    Returns ``(I_edges, I_nodes, nodes, weights)`` where ``I`` holds the
    Q-coordinates of m (shape ``(..., n)``) and ``nodes`` the outer Gauss
    points of each panel.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    nu = modal.nu
    K = len(edges) - 1
    n = nu.size
    I_edges = np.zeros((K + 1, n), dtype=complex)
    nodes = 0.5 * (edges[1:, None] - edges[:-1, None]) * x + 0.5 * (edges[1:, None] + edges[:-1, None])
    weights = 0.5 * (edges[1:, None] - edges[:-1, None]) * w
    I_nodes = np.zeros((K, order, n), dtype=complex)
    if not F.terms:
        return I_edges, I_nodes, nodes, weights
    for k in range(K - 1, -1, -1):
        a, b = edges[k], edges[k + 1]
        carry = I_edges[k + 1]
        # partial panels [s_q, b] for each outer node s_q, all q at once
        half = 0.5 * (b - nodes[k])                                 # (order,)
        tq = half[:, None] * x[None, :] + 0.5 * (b + nodes[k])[:, None]
        psi_q = F.profile_values(tq.ravel())
        if not np.any(psi_q):
            I_edges[k] = np.exp(-(b - a) * nu) * carry
            I_nodes[k] = np.exp(-np.outer(b - nodes[k], nu)) * carry
            continue
        psi = F.profile_values(nodes[k])                            # (terms, order)
        e = np.exp(-np.outer(nodes[k] - a, nu))                     # (order, n)
        I_edges[k] = np.sum(weights[k][:, None] * e * (psi.T @ c), axis=0) + np.exp(-(b - a) * nu) * carry
        src_q = (psi_q.T @ c).reshape(order, order, n)
        eq = np.exp(-(tq - nodes[k][:, None])[..., None] * nu)       # (order, order, n)
        wq = half[:, None] * w[None, :]
        I_nodes[k] = (np.sum(wq[..., None] * eq * src_q, axis=1)
                      + np.exp(-np.outer(b - nodes[k], nu)) * carry)
    return I_edges, I_nodes, nodes, weights


def _evolve(modal: _Modal, g, edges, I_edges, I_nodes, nodes, weights, out_idx):
    """Forward recurrence for the P-coordinates of u at the requested edges."""
    mu = modal.mu
    X = modal.X
    uh = modal.Vinv @ g
    out = {}
    if 0 in out_idx:
        out[0] = uh.copy()
    K = len(edges) - 1
    for k in range(K):
        a, b = edges[k], edges[k + 1]
        uh = np.exp(-(b - a) * mu) * uh
        if np.any(I_nodes[k]):
            y = I_nodes[k] @ X.T                                  # (order, n)
            e = np.exp(-np.outer(b - nodes[k], mu))
            uh = uh + np.sum(weights[k][:, None] * e * y, axis=0)
        if k + 1 in out_idx:
            out[k + 1] = uh.copy()
    return out


def _hypothesis_status(A: CoefficientField) -> str:
    rep = check_symmetry_condition(A)
    return "verified" if (rep.hermitian or rep.symmetric) else "unverified"


def _mild(pair: PoissonPair, g, F: SeparableField, t_grid, order: int = PANEL_ORDER,
          width_cap: float = 1.0, modal: _Modal | None = None) -> BVPSolution:
    modal = modal or _Modal(pair)
    grid = pair.grid
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise ValueError("sample times must be nonnegative")
    c = modal.forcing_coefficients(F)
    t_end = float(t_grid.max(initial=0.0))
    T_max, bound = choose_horizon(modal, F, c, t_end)
    width = panel_width(modal, width_cap)
    breaks = [0.0, T_max] + list(t_grid) + [p for p in F.breakpoints() if 0 < p < T_max]
    if F.is_zero:
        edges = np.asarray(sorted(set(float(p) for p in breaks)))
    else:
        # no forcing is left after its support: plain propagation between samples
        active_end = min(T_max, F.end)
        inside = [p for p in breaks if p <= active_end]
        outside = sorted(set(float(p) for p in breaks if p > active_end))
        edges = np.concatenate([_uniform_edges(inside + [active_end], width), outside])
    I_edges, I_nodes, nodes, weights = _tail_recurrence(modal, F, c, edges, order)
    pos = np.searchsorted(edges, t_grid)
    out = _evolve(modal, np.asarray(g, dtype=complex), edges, I_edges, I_nodes, nodes,
                  weights, set(pos.tolist()))
    U = np.stack([modal.V @ out[p] for p in pos]) if t_grid.size else np.zeros((0, grid.n))
    # the representation formula returns the trace itself at t = 0
    U[t_grid == 0] = np.asarray(g, dtype=complex)
    Mq = I_edges[pos] @ modal.W.T
    dU = -(U @ pair.P.T) + Mq
    diag = {
        "lam": pair.lam,
        "T_max": T_max,
        "tail_bound": bound,
        "quadrature_order": order,
        "panel_width": width,
        "panels": len(edges) - 1,
        "hypothesis": _hypothesis_status(pair.T.coeffs),
    }
    return BVPSolution(t_grid.copy(), U, dU, Mq, grid, diag)


# -- public solvers -----------------------------------------------------------

def solve_dirichlet_homogeneous(A: CoefficientField, g, lam: float = 1.0, t_grid=None,
                                pair: PoissonPair | None = None) -> BVPSolution:
    """u(t_k) = exp(-t_k P) g with norm traces; continuity at 0 is checked."""
    pair = pair or poisson_pair(A, lam)
    t_grid = _default_t(t_grid)
    sol = _mild(pair, g, SeparableField.zero(A.grid), t_grid)
    g = np.asarray(g, dtype=complex)
    sol.diagnostics["trace_error"] = _trace_error(sol, g)
    return sol


def _trace_error(sol: BVPSolution, g) -> float:
    """||u(t_min) - g|| / max(||g||, tiny), the smallest sample time standing in for 0."""
    if sol.t.size == 0:
        return 0.0
    i = int(np.argmin(sol.t))
    grid = sol.grid
    return grid.l2_norm(sol.u[i] - g) / max(grid.l2_norm(g), 1e-300)


def _default_t(t_grid):
    return np.concatenate([[0.0], np.logspace(-3, 3, 61)]) if t_grid is None else np.asarray(t_grid, float)


def duhamel_tail(A: CoefficientField, F: SeparableField, s: float, lam: float = 1.0,
                 pair: PoissonPair | None = None, order: int = PANEL_ORDER):
    """m(s) = int_s^inf exp(-(tau-s)Q) M_{1/b} F(tau) dtau.

    Returns
    -------
    value : ndarray
    bound : float
        Closed-form bound on the truncated tail (part of the error budget,
        not of the value).
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    pair = pair or poisson_pair(A, lam)
    modal = _Modal(pair)
    c = modal.forcing_coefficients(F)
    T_max, bound = choose_horizon(modal, F, c, s)
    if T_max <= s or F.is_zero:
        return np.zeros(A.grid.n, dtype=complex), bound
    pts = [s, T_max] + [p for p in F.breakpoints() if s < p < T_max]
    edges = _uniform_edges(pts, panel_width(modal))
    I_edges, _, _, _ = _tail_recurrence(modal, F, c, edges, order)
    return modal.W @ I_edges[0], bound


def solve_dirichlet_inhomogeneous(A: CoefficientField, F: SeparableField, lam: float = 1.0,
                                  t_grid=None, g=None, pair: PoissonPair | None = None,
                                  order: int = PANEL_ORDER, width_cap: float = 1.0) -> BVPSolution:
    """Mild solution with forcing F and trace g (zero by default)."""
    pair = pair or poisson_pair(A, lam)
    g = np.zeros(A.grid.n, dtype=complex) if g is None else np.asarray(g, dtype=complex)
    sol = _mild(pair, g, F, _default_t(t_grid), order, width_cap)
    sol.diagnostics["trace_error"] = _trace_error(sol, g)
    return sol


def invert_dtn(Lam: np.ndarray, h) -> tuple[np.ndarray, dict]:
    """Lambda^{-1} h by dense solve, with Tikhonov fallback on a poor residual.

    Raises
    ------
    RangeConditionError
        If the final relative residual exceeds ``RANGE_TOL``.
    """
    h = np.asarray(h, dtype=complex)
    hn = max(np.linalg.norm(h), 1e-300)
    info = {"tikhonov": False}
    try:
        v = np.linalg.solve(Lam, h)
        res = np.linalg.norm(Lam @ v - h) / hn
        ok = np.all(np.isfinite(v)) and res <= PLAIN_SOLVE_TOL
    except np.linalg.LinAlgError:
        ok, res = False, math.inf
    if not ok:
        mu = TIKHONOV_SCALE * np.linalg.norm(Lam, 2)
        n = Lam.shape[0]
        LH = Lam.conj().T
        v = np.linalg.solve(LH @ Lam + mu**2 * np.eye(n), LH @ h)
        res = np.linalg.norm(Lam @ v - h) / hn
        info["tikhonov"] = True
        info["tikhonov_mu"] = float(mu)
    info["range_residual"] = float(res)
    if res > RANGE_TOL:
        raise RangeConditionError(f"datum is not in the range of the DtN map: relative residual "
                                  f"{res:.3g} > {RANGE_TOL:g}"
                                  + (" after Tikhonov regularization" if info["tikhonov"] else ""))
    return v, info


def solve_neumann(A: CoefficientField, g, F: SeparableField | None = None, lam: float = 1.0,
                  t_grid=None, pair: PoissonPair | None = None,
                  order: int = PANEL_ORDER) -> BVPSolution:
    """Mild Neumann solution for the conormal datum ``g = -(b d_t v + r2 . grad v)(0)``."""
    pair = pair or poisson_pair(A, lam)
    F = F if F is not None else SeparableField.zero(A.grid)
    g = np.asarray(g, dtype=complex)
    Lam = dtn_from_pencil(pair).matrix
    m0, bound0 = duhamel_tail(A, F, 0.0, lam, pair, order)
    h = g + pair.b * m0
    v0, info = invert_dtn(Lam, h)
    sol = _mild(pair, v0, F, _default_t(t_grid), order)
    # read the flux off the computed solution when t = 0 is sampled
    flux = conormal_flux(pair, sol) if np.any(sol.t == 0) else Lam @ v0 - pair.b * m0
    grid = A.grid
    sol.diagnostics.update(info)
    sol.diagnostics["trace"] = v0
    sol.diagnostics["flux_error"] = grid.l2_norm(flux - g) / max(grid.l2_norm(g), 1e-300)
    sol.diagnostics["tail_bound_0"] = bound0
    return sol


def conormal_flux(pair: PoissonPair, sol: BVPSolution) -> np.ndarray:
    """-(b d_t u + r2 . grad u) at the smallest sample time."""
    i = int(np.argmin(sol.t))
    return -(pair.b * sol.du[i] + pair.T.D2 @ sol.u[i])


# -- estimates ----------------------------------------------------------------

def decay_probe(sol: BVPSolution, t_min: float = 1.0) -> dict:
    """Least-squares exponents of ||grad u(t)|| and ||u(t)|| against (1 + t).

    Samples with ``t < t_min`` and exactly vanishing norms are ignored.  An
    identically zero solution yields ``None`` for every exponent.
    """
    out = {}
    for key, vals in (("grad", sol.grad_l2), ("l2", sol.l2)):
        keep = (sol.t >= t_min) & (vals > 0)
        if keep.sum() < 2:
            out[key] = None
            continue
        x = np.log1p(sol.t[keep])
        y = np.log(vals[keep])
        out[key] = float(np.polyfit(x, y, 1)[0])
    return out


def hls_exponent(p: float, r: float) -> float:
    """q from 1/q = r - 1 + 1/p, after checking 1 < p < inf and 1 - 1/p < r < 1."""
    if not (1 < p < math.inf):
        raise ValueError(f"need 1 < p < inf, got p = {p}")
    if not (1 - 1 / p < r < 1):
        raise ValueError(f"need 1 - 1/p < r < 1, got r = {r} with p = {p}")
    return 1.0 / (r - 1 + 1 / p)


def hls_forcing(grid, p: float, r: float, eta: float = 0.05) -> SeparableField:
    """F(x, tau) = f_r(x) (1 + tau)^(-(1+eta)/p) with ||f_r||_{H^-r} = 1.

    The spatial envelope is ``|k|^(r - d/2 - eta)``: its homogeneous
    H^{-r} sum behaves like ``sum |k|^(-d - 2 eta)``.
    """
    hls_exponent(p, r)
    kk = grid.kabs
    sym = np.zeros(grid.n)
    nz = kk > 0
    sym[nz] = kk[nz] ** (r - grid.d / 2 - eta)
    f = grid.ifft(sym.astype(complex)).real.astype(complex)
    f = f / grid.sobolev_norm(f, -r)
    return SeparableField(grid, [(f, PowerLaw((1 + eta) / p))])


def lq_time_norm(t, vals, q: float) -> float:
    """(int |vals|^q dt)^(1/q) by the trapezoid rule on the sample times."""
    return float(trapezoid(np.abs(vals) ** q, t) ** (1.0 / q))


def hls_solvability_run(A: CoefficientField, p: float, r: float, t_grid, lam: float = 0.0,
                        pair: PoissonPair | None = None) -> dict:
    """||grad u||_{L^q(0,T; L^2)} for the synthesized L^p(H^-r) forcing.

    No uniqueness is asserted; the row only records finiteness.
    """
    q = hls_exponent(p, r)
    F = hls_forcing(A.grid, p, r)
    sol = solve_dirichlet_inhomogeneous(A, F, lam, t_grid, pair=pair)
    norm = lq_time_norm(sol.t, sol.grad_l2, q)
    return {"p": p, "r": r, "q": q, "T": float(np.max(sol.t)), "samples": int(sol.t.size),
            "grad_lq_norm": norm, "finite": bool(math.isfinite(norm)),
            "T_max": sol.diagnostics["T_max"], "tail_bound": sol.diagnostics["tail_bound"]}


def weak_residual(A: CoefficientField, F: SeparableField, lam: float, tests,
                  pair: PoissonPair | None = None, order: int = PANEL_ORDER,
                  g=None) -> np.ndarray:
    """Relative residuals of the weak form for the mild Dirichlet solution.

    For every test field ``phi`` (a :class:`SeparableField` compactly
    supported in t > 0) this computes
    ``int <A grad u, grad phi> + lam <u, phi> - <F, phi> dt`` divided by the
    Cauchy-Schwarz bound of the three terms, so a test field that only sees
    round-off is not reported as a unit residual.
    """
    from .identities import _space_time_form
    pair = pair or poisson_pair(A, lam)
    out = []
    x, w = np.polynomial.legendre.leggauss(order)
    grid = A.grid
    for phi in tests:
        pts = [phi.start, phi.end] + [p for p in phi.breakpoints() + F.breakpoints()
                                      if phi.start < p < phi.end]
        edges = _uniform_edges(pts, min(1.0, 1.0 / pair.spectral_gap()))
        t = (0.5 * (edges[1:, None] - edges[:-1, None]) * x
             + 0.5 * (edges[1:, None] + edges[:-1, None])).ravel()
        wt = (0.5 * (edges[1:, None] - edges[:-1, None]) * w).ravel()
        sol = solve_dirichlet_inhomogeneous(A, F, lam, t, g=g, pair=pair, order=order)
        a = np.sum(wt * _space_time_form(A, lam, sol.u, sol.du, phi(t), phi.dt(t)))
        f = np.sum(wt * grid.weight * np.sum(F(t) * np.conj(phi(t)), axis=-1))
        scale = np.sum(wt * (np.max(np.abs(A.A)) * _norm(grid, _grad(grid, sol.u, sol.du))
                             * _norm(grid, _grad(grid, phi(t), phi.dt(t)))
                             + (abs(lam) * _norm(grid, sol.u) + _norm(grid, F(t)))
                             * _norm(grid, phi(t))))
        out.append(abs(a - f) / max(scale, 1e-300))
    return np.asarray(out)


def _grad(grid, U, dU) -> np.ndarray:
    return np.concatenate([grid.gradient(U), dU[None]], axis=0)


def _norm(grid, X) -> np.ndarray:
    """Discrete L2 norm over the trailing (spatial) axis, summed over leading components."""
    X = np.asarray(X)
    sq = np.abs(X) ** 2
    if X.ndim == 3:
        sq = sq.sum(axis=0)
    return np.sqrt(grid.weight * sq.sum(axis=-1))


def random_test_fields(grid, count: int, seed: int = 0, t_range=(0.1, 4.0),
                       terms: int = 3) -> list[SeparableField]:
    """Random separable test fields, each a sum of polynomial bumps in t."""
    rng = np.random.default_rng(seed)
    out = []
    lo, hi = t_range
    for _ in range(count):
        fs = grid.random_bandlimited(rng, terms)
        items = []
        for f in fs:
            a = rng.uniform(lo, hi - 0.5)
            b = rng.uniform(a + 0.3, min(hi, a + 2.0))
            items.append((f, Bump(a, b)))
        out.append(SeparableField(grid, items))
    return out
