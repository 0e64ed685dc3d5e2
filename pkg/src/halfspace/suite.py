"""Experiment cases: config recipes and one runner per CLI command.

A case is a JSON object::

    {"case_id": "herm0", "grid": {"d": 1, "N": 32},
     "coeffs": {"builder": "hermitian_sample", "seed": 0},
     "lam": 1.0, "params": {...}}

Runners never raise for tolerance failures; they return a
:class:`CaseResult` whose checks say what passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bvp, coeffs, identities, oracle, pencil, semigroup
from .grid import Grid
from .profiles import Bump, Exponential, PowerLaw, SeparableField, SmoothBump


class ConfigError(ValueError):
    """A case description is malformed."""


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance,
                "passed": bool(self.passed)}


@dataclass
class CaseResult:
    case_id: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    error: str | None = None

    def status(self, strict: bool = False) -> str:
        if self.error is not None:
            return "error"
        if not all(c.passed for c in self.checks):
            return "fail"
        if strict and self.flags.get("hypothesis") == "unverified":
            return "fail"
        return "pass"


# -- recipes ------------------------------------------------------------------

def build_grid(recipe: dict) -> Grid:
    try:
        return Grid(int(recipe["d"]), int(recipe["N"]), float(recipe.get("L", 2 * np.pi)))
    except KeyError as exc:
        raise ConfigError(f"grid recipe is missing {exc}") from exc


def _complex_matrix(obj) -> np.ndarray:
    """Nested lists whose entries are numbers or ``[re, im]`` pairs."""
    return np.array([[complex(*x) if isinstance(x, list) else complex(x) for x in row]
                     for row in obj])


_BUILDERS = {
    "identity": lambda g, kw: coeffs.identity(g),
    "constant": lambda g, kw: coeffs.constant(g, _complex_matrix(kw["matrix"])),
    "hermitian_sample": lambda g, kw: coeffs.hermitian_sample(g, **kw),
    "random_elliptic_sample": lambda g, kw: coeffs.random_elliptic_sample(g, **kw),
    "regular_offblock_sample": lambda g, kw: coeffs.regular_offblock_sample(g, **kw),
    "kkpt_probe": lambda g, kw: coeffs.kkpt_probe(g, **kw),
    "file": lambda g, kw: coeffs.CoefficientField.load(kw["path"]),
}


def build_coeffs(grid: Grid, recipe: dict) -> coeffs.CoefficientField:
    recipe = dict(recipe)
    name = recipe.pop("builder", None)
    if name not in _BUILDERS:
        raise ConfigError(f"unknown coefficient builder {name!r}; choose from {sorted(_BUILDERS)}")
    A = _BUILDERS[name](grid, recipe)
    if A.grid != grid:
        raise ConfigError("coefficient file grid differs from the case grid")
    return A


def build_field(grid: Grid, recipe: dict | None) -> np.ndarray:
    """Spatial grid function from a recipe."""
    recipe = recipe or {"kind": "zero"}
    kind = recipe.get("kind")
    if kind == "zero":
        return np.zeros(grid.n, dtype=complex)
    if kind == "mode":
        return grid.mode(recipe["k"]) * complex(recipe.get("amplitude", 1.0))
    if kind == "constant":
        return np.full(grid.n, complex(recipe.get("value", 1.0)))
    if kind == "random":
        rng = np.random.default_rng(int(recipe.get("seed", 0)))
        return grid.random_bandlimited(rng, mean_zero=bool(recipe.get("mean_zero", False)),
                                       real=bool(recipe.get("real", False)))
    if kind == "bump":
        return coeffs.bump(grid, recipe.get("center"), float(recipe.get("width_cells", 4))).astype(complex)
    raise ConfigError(f"unknown field recipe {kind!r}")


def build_profile(recipe: dict):
    kind = recipe.get("kind")
    if kind == "bump":
        return Bump(float(recipe["start"]), float(recipe["end"]), int(recipe.get("power", 4)))
    if kind == "smooth_bump":
        return SmoothBump(float(recipe["start"]), float(recipe["end"]))
    if kind == "exponential":
        return Exponential(float(recipe["rate"]))
    if kind == "power_law":
        return PowerLaw(float(recipe["gamma"]))
    raise ConfigError(f"unknown time profile {kind!r}")


def build_forcing(grid: Grid, recipe) -> SeparableField:
    if not recipe:
        return SeparableField.zero(grid)
    return SeparableField(grid, [(build_field(grid, term["space"]), build_profile(term["time"]))
                                 for term in recipe])


def build_t_grid(recipe, default=None) -> np.ndarray:
    if recipe is None:
        return np.asarray(default if default is not None else semigroup.DEFAULT_T_GRID, float)
    if isinstance(recipe, list):
        return np.asarray(recipe, dtype=float)
    kind = recipe.get("kind", "log")
    if kind == "log":
        t = np.logspace(float(recipe.get("start", -3)), float(recipe.get("stop", 3)),
                        int(recipe.get("num", 61)))
    elif kind == "linear":
        t = np.linspace(float(recipe.get("start", 0.0)), float(recipe["stop"]), int(recipe["num"]))
    else:
        raise ConfigError(f"unknown t-grid kind {kind!r}")
    if recipe.get("include_zero", False) and t[0] > 0:
        t = np.concatenate([[0.0], t])
    return t


@dataclass
class Case:
    case_id: str
    grid: Grid
    A: coeffs.CoefficientField
    lam: float
    params: dict

    @classmethod
    def from_dict(cls, obj: dict) -> Case:
        if "case_id" not in obj:
            raise ConfigError("every case needs a case_id")
        grid = build_grid(obj.get("grid", {}))
        A = build_coeffs(grid, obj.get("coeffs", {"builder": "identity"}))
        lam = float(obj.get("lam", 1.0))
        return cls(str(obj["case_id"]), grid, A, lam, dict(obj.get("params", {})))

    def stamp(self, row: dict, tolerance: float) -> dict:
        g = self.grid
        base = {"case_id": self.case_id, "d": g.d, "N": g.N, "L": float(g.L), "lam": self.lam}
        base.update({k: v for k, v in row.items() if k != "case_id"})
        base["tolerance"] = float(tolerance)
        return base


def expand_config(config: dict) -> list[dict]:
    """Config to case dicts: either one case or ``{"defaults": ..., "cases": [...]}``."""
    if "cases" not in config:
        return [config]
    defaults = config.get("defaults", {})
    out = []
    for c in config["cases"]:
        merged = dict(defaults)
        merged.update(c)
        if "params" in defaults or "params" in c:
            merged["params"] = {**defaults.get("params", {}), **c.get("params", {})}
        out.append(merged)
    return out


# -- runners ------------------------------------------------------------------

def _check_ellipticity(case: Case, res: CaseResult) -> bool:
    rep = coeffs.check_ellipticity(case.A)
    ok = rep.ok
    res.checks.append(Check("ellipticity", rep.nu1, 0.0, ok))
    res.rows.append(case.stamp({"check": "ellipticity", "value": rep.nu1, "passed": ok}, 0.0))
    return ok


def _add(case: Case, res: CaseResult, name: str, value: float, tol: float, passed: bool,
         **extra) -> None:
    res.checks.append(Check(name, float(value), float(tol), bool(passed)))
    res.rows.append(case.stamp({"check": name, "value": float(value), "passed": bool(passed),
                                **extra}, tol))


def run_verify_factorization(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    tol = float(case.params.get("tolerance", 1e-8))
    if not _check_ellipticity(case, res):
        return res
    pair = pencil.poisson_pair(case.A, case.lam)
    _add(case, res, "factorization_residual", pair.factorization_residual(), tol,
         pair.factorization_residual() <= tol)
    _add(case, res, "pencil_residual", pair.pencil_residual(), tol, pair.pencil_residual() <= tol)
    for mu in case.params.get("mu", [0.5]):
        mu_c = complex(*mu) if isinstance(mu, list) else complex(mu)
        r = pair.full_factorization_residual(mu_c)
        _add(case, res, f"full_factorization_residual[mu={mu_c.real:g}{mu_c.imag:+g}j]", r, tol,
             r <= tol)
    Lam = pencil.dtn_from_pencil(pair).matrix
    Lam_s = pencil.dtn_from_pencil(pair, adjoint=True).matrix
    adj = float(np.linalg.norm(Lam.conj().T - Lam_s) / np.linalg.norm(Lam))
    _add(case, res, "dtn_adjoint_residual", adj, tol, adj <= tol)
    _add(case, res, "min_re_spectrum", pair.min_re_spectrum(), 0.0,
         pair.min_re_spectrum() > 0 or pair.root.zero_mode)
    _add(case, res, "sector_angle", pair.sector_angle(), math.pi / 2,
         pair.sector_angle() < math.pi / 2)
    return res


def run_rellich_check(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    tol = float(case.params.get("tolerance", 1e-8))
    trials = int(case.params.get("trials", 20))
    seed = int(case.params.get("seed", 0))
    if not _check_ellipticity(case, res):
        return res
    pair = pencil.poisson_pair(case.A, case.lam)
    rng = np.random.default_rng(seed)
    fs = case.grid.random_bandlimited(rng, trials)
    gs = case.grid.random_bandlimited(rng, trials)
    hermitian = case.A.hermitian_defect() <= identities.HERMITIAN_TOL
    reports = []
    for i, (f, g) in enumerate(zip(fs, gs)):
        if hermitian:
            reports.append(identities.rellich_hermitian(case.A, f, case.lam, pair, case.case_id))
        reports.append(identities.rellich_general(case.A, f, g, case.lam, pair, case.case_id))
    for r in reports:
        res.rows.append(case.stamp(r.to_row(), tol))
    for name in sorted({r.name for r in reports}):
        worst = max(r.rel_residual for r in reports if r.name == name)
        res.checks.append(Check(f"max_rel_residual[{name}]", worst, tol, worst <= tol))
    return res


def run_semigroup_decay(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    tol = float(case.params.get("tolerance", 1e-8))
    if not _check_ellipticity(case, res):
        return res
    pair = pencil.poisson_pair(case.A, case.lam)
    E = semigroup.SemigroupEvaluator(pair)
    t = build_t_grid(case.params.get("t_grid"))
    rep = semigroup.measure_decay(E, (), t)
    for row in rep.to_rows(case.case_id):
        res.rows.append(case.stamp(row, tol))
    res.flags["strategy"] = E.strategy
    if "sym_L2" in rep.norms and case.A.hermitian_defect() <= identities.HERMITIAN_TOL:
        s = float(rep.norms["sym_L2"].max())
        res.checks.append(Check("sup_sym_L2", s, 1 + tol, s <= 1 + tol))
    a = float(rep.norms["analytic"].max())
    res.checks.append(Check("sup_analytic", a, math.inf, math.isfinite(a)))
    return res


def run_kato_check(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    tol = float(case.params.get("tolerance", 1e-6))
    if not _check_ellipticity(case, res):
        return res
    T = pencil.assemble(case.A, 0.0)
    lo, hi = pencil.kato_check(T, int(case.params.get("trials", 50)), int(case.params.get("seed", 0)))
    rep = coeffs.check_ellipticity(case.A)
    herm = case.A.hermitian_defect() <= identities.HERMITIAN_TOL
    if herm:
        a, b = math.sqrt(rep.nu1) - tol, math.sqrt(rep.nu2) + tol
        _add(case, res, "kato_ratio_min", lo, a, lo >= a, bound=a)
        _add(case, res, "kato_ratio_max", hi, b, hi <= b, bound=b)
    else:
        _add(case, res, "kato_ratio_min", lo, 0.0, math.isfinite(lo) and lo > 0)
        _add(case, res, "kato_ratio_max", hi, math.inf, math.isfinite(hi))
    return res


def _solution_checks(case: Case, res: CaseResult, sol: bvp.BVPSolution, F: SeparableField,
                     tol: float) -> None:
    for row in sol.to_rows(case.case_id):
        res.rows.append(case.stamp(row, tol))
    finite = bool(np.all(np.isfinite(sol.l2)) and np.all(np.isfinite(sol.grad_l2)))
    res.checks.append(Check("finite_norms", float(np.max(sol.l2, initial=0.0)), math.inf, finite))
    res.flags["hypothesis"] = sol.diagnostics["hypothesis"] if not F.is_zero else "not-needed"
    res.flags["T_max"] = sol.diagnostics["T_max"]
    res.flags["tail_bound"] = sol.diagnostics["tail_bound"]
    ex = bvp.decay_probe(sol)
    res.flags["growth_exponent_grad"] = ex["grad"]
    limit = case.params.get("max_growth_exponent")
    if limit is not None and ex["grad"] is not None:
        res.checks.append(Check("growth_exponent_grad", ex["grad"], float(limit),
                                ex["grad"] <= float(limit)))


def run_solve_dirichlet(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    tol = float(case.params.get("tolerance", 1e-10))
    if not _check_ellipticity(case, res):
        return res
    g = build_field(case.grid, case.params.get("g"))
    F = build_forcing(case.grid, case.params.get("F"))
    t = build_t_grid(case.params.get("t_grid"), bvp._default_t(None))
    pair = pencil.poisson_pair(case.A, case.lam)
    sol = bvp.solve_dirichlet_inhomogeneous(case.A, F, case.lam, t, g=g, pair=pair)
    _solution_checks(case, res, sol, F, tol)
    if np.any(t == 0):
        err = sol.diagnostics["trace_error"]
        res.checks.append(Check("trace_error", err, tol, err <= tol))
    return res


def run_solve_neumann(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    tol = float(case.params.get("tolerance", 1e-6))
    if not _check_ellipticity(case, res):
        return res
    g = build_field(case.grid, case.params.get("g"))
    F = build_forcing(case.grid, case.params.get("F"))
    t = build_t_grid(case.params.get("t_grid"), bvp._default_t(None))
    pair = pencil.poisson_pair(case.A, case.lam)
    try:
        sol = bvp.solve_neumann(case.A, g, F, case.lam, t, pair=pair)
    except bvp.RangeConditionError as exc:
        res.flags["range_condition"] = str(exc)
        _add(case, res, "range_condition", math.inf, bvp.RANGE_TOL, False)
        return res
    _solution_checks(case, res, sol, F, tol)
    res.flags["tikhonov"] = sol.diagnostics["tikhonov"]
    _add(case, res, "range_residual", sol.diagnostics["range_residual"], bvp.RANGE_TOL,
         sol.diagnostics["range_residual"] <= bvp.RANGE_TOL)
    _add(case, res, "flux_error", sol.diagnostics["flux_error"], tol,
         sol.diagnostics["flux_error"] <= tol)
    return res


def _l2_time(u, t) -> float:
    from scipy.integrate import trapezoid
    return float(math.sqrt(trapezoid(np.sum(np.abs(u) ** 2, axis=-1), t)))


def mild_oracle_comparison(A, F: SeparableField, lam: float, levels=(512, 1024),
                           gap_multiple: float = 16.0, pair=None) -> dict:
    """Relative L2-in-time distance between the mild solution and oracle solves.

    The budget is twice the distance between the two finest oracle levels,
    a conservative bound on the error of the finer one at second order.
    """
    pair = pair or pencil.poisson_pair(A, lam)
    levels = sorted(int(m) for m in levels)
    if len(levels) < 2:
        raise ConfigError("mild-vs-oracle needs at least two oracle levels")
    T_max = gap_multiple / pair.spectral_gap()
    cyl_f = oracle.TruncatedCylinder(T_max, levels[-1])
    t = cyl_f.t
    sol = bvp.solve_dirichlet_inhomogeneous(A, F, lam, t, pair=pair)
    ref = _l2_time(sol.u, t)
    out = {"levels": [], "T_max": T_max}
    fine = None
    for M in levels:
        cyl = oracle.TruncatedCylinder(T_max, M)
        uo = oracle.direct_bvp(A, lambda s: F(s)[0], None, "dirichlet", lam, cyl)
        stride = levels[-1] // M
        err = _l2_time(sol.u[::stride] - uo, cyl.t) / ref
        out["levels"].append({"M": M, "dt": cyl.dt, "error": err})
        if M == levels[-2]:
            coarse = uo
        fine = uo
    stride = levels[-1] // levels[-2]
    diff = _l2_time(fine[::stride] - coarse, oracle.TruncatedCylinder(T_max, levels[-2]).t) / ref
    out["budget"] = 2 * diff
    out["error"] = out["levels"][-1]["error"]
    return out


def run_mild_vs_oracle(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    if not _check_ellipticity(case, res):
        return res
    F = build_forcing(case.grid, case.params.get("F") or
                      [{"space": {"kind": "random", "seed": 0},
                        "time": {"kind": "bump", "start": 0.5, "end": 2.5}}])
    out = mild_oracle_comparison(case.A, F, case.lam, case.params.get("levels", (512, 1024)),
                                 float(case.params.get("gap_multiple", 16.0)))
    for lev in out["levels"]:
        res.rows.append(case.stamp({"check": "oracle_error", "M": lev["M"], "dt": lev["dt"],
                                    "value": lev["error"]}, out["budget"]))
    _add(case, res, "mild_vs_oracle", out["error"], out["budget"], out["error"] <= out["budget"])
    return res


def run_condition_scan(case: Case) -> CaseResult:
    res = CaseResult(case.case_id)
    if not _check_ellipticity(case, res):
        return res
    alpha = float(case.params.get("alpha", 0.0))
    rep = coeffs.condition_report(case.A, alpha, int(case.params.get("trials", 200)),
                                  int(case.params.get("seed", 0)))
    items = [("offblock_sum_real", float(rep.offblock_sum_real)),
             ("offblock_violation", rep.offblock_violation),
             ("b_real", float(rep.b_real)),
             ("b_violation", rep.b_violation),
             ("hermitian", float(rep.hermitian)),
             ("scan_r1_delta", rep.scan_r1[0]), ("scan_r1_C", rep.scan_r1[1]),
             ("scan_r2_delta", rep.scan_r2[0]), ("scan_r2_C", rep.scan_r2[1])]
    for name, val in items:
        res.rows.append(case.stamp({"check": name, "value": val, "alpha": alpha}, 0.0))
    res.flags["symmetric_condition"] = rep.symmetric
    return res


RUNNERS = {
    "verify-factorization": run_verify_factorization,
    "rellich-check": run_rellich_check,
    "semigroup-decay": run_semigroup_decay,
    "kato-check": run_kato_check,
    "solve-dirichlet": run_solve_dirichlet,
    "solve-neumann": run_solve_neumann,
    "mild-vs-oracle": run_mild_vs_oracle,
    "condition-scan": run_condition_scan,
}


def run_case(command: str, case_dict: dict) -> CaseResult:
    """Build and run one case, turning any exception into an error result."""
    cid = str(case_dict.get("case_id", "?"))
    try:
        case = Case.from_dict(case_dict)
        return RUNNERS[command](case)
    except Exception as exc:  # collected, never aborts the suite
        return CaseResult(cid, error=f"{type(exc).__name__}: {exc}")
