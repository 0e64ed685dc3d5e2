import math
import warnings

import numpy as np
import pytest

from halfspace import coeffs
from halfspace.oracle import (CylinderSystem, OracleWarning, TruncatedCylinder, direct_bvp,
                              direct_extension, dtn_from_extension, extension_energy)
from halfspace.pencil import assemble, dtn_from_pencil, poisson_pair

T_END = 4.0


def _manufactured(A, k=2, lam=1.0):
    """u* = f(x) phi(t) with phi vanishing at T_END, and F = (A + lam) u*."""
    g = A.grid
    f = g.mode([k]) * (1 + 0.3 * np.cos(g.x[0]))
    phi = lambda t: np.exp(-t) * (1 - t / T_END)
    dphi = lambda t: -np.exp(-t) * (1 + 1 / T_END - t / T_END)
    ddphi = lambda t: np.exp(-t) * (1 + 2 / T_END - t / T_END)
    T = assemble(A, lam)
    Kf, Df, bf = T.K @ f, T.D @ f, T.b * f
    F = lambda t: phi(t) * Kf - dphi(t) * Df - ddphi(t) * bf
    exact = lambda t: np.outer(phi(t), f)
    flux0 = -(dphi(0.0) * bf + phi(0.0) * (T.D2 @ f))
    return f, F, exact, flux0


def _slope(errs, Ms):
    return -np.polyfit(np.log(Ms), np.log(errs), 1)[0]


def test_cylinder_validation():
    with pytest.raises(ValueError):
        TruncatedCylinder(1.0, 32)
    with pytest.raises(ValueError):
        TruncatedCylinder(0.0, 64)


def test_for_pair_uses_gap(grid32, herm32):
    pair = poisson_pair(herm32, 1.0)
    cyl = TruncatedCylinder.for_pair(pair, 64)
    assert cyl.T_max == pytest.approx(8 / pair.spectral_gap())


def test_extension_of_laplacian_mode(grid32):
    A = coeffs.identity(grid32)
    g = grid32.mode([1])
    errs = []
    Ms = [128, 256]
    for M in Ms:
        cyl = TruncatedCylinder(20.0, M)
        u = direct_extension(A, g, 1.0, cyl)
        errs.append(np.max(np.abs(u - np.outer(np.exp(-np.sqrt(2) * cyl.t), g))))
    assert errs[1] < errs[0] < 1e-2
    assert 1.8 <= _slope(errs, Ms) <= 2.2


def test_zero_datum_zero_extension(herm32):
    u = direct_extension(herm32, np.zeros(32), 1.0, TruncatedCylinder(5.0, 64))
    assert not np.any(u)


def test_energy_matches_pencil(herm32, rng):
    from halfspace.identities import hermitian_energy_check
    g = herm32.grid.random_bandlimited(rng, fraction=0.5)
    assert hermitian_energy_check(herm32, g, 1.0, M=1024).rel_residual < 1e-3


def test_laplacian_dtn_zero_shift(grid32):
    A = coeffs.identity(grid32)
    cyl = TruncatedCylinder(20.0, 1024)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OracleWarning)
        Lam = dtn_from_extension(A, 0.0, cyl)
    fs = np.stack([grid32.mode([k]) for k in range(1, 6)], axis=1)
    rel = np.linalg.norm(Lam.matrix @ fs - grid32.abs_derivative_matrix(1.0) @ fs) / np.linalg.norm(fs)
    assert Lam.provenance == "extension-oracle"
    assert rel < 5 * (5 * cyl.dt) ** 2


def test_dtn_converges_second_order(herm32):
    pair = poisson_pair(herm32, 1.0)
    ref = dtn_from_pencil(pair).matrix
    Ms = [256, 512, 1024]
    errs = []
    for M in Ms:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OracleWarning)
            Lam = dtn_from_extension(herm32, 1.0, TruncatedCylinder.for_pair(pair, M)).matrix
        errs.append(np.linalg.norm(Lam - ref) / np.linalg.norm(ref))
    assert 1.8 <= _slope(errs, Ms) <= 2.2


def test_dtn_readings_recorded(herm32):
    pair = poisson_pair(herm32, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OracleWarning)
        Lam = dtn_from_extension(herm32, 1.0, TruncatedCylinder.for_pair(pair, 512))
    diag = Lam.diagnostics
    assert set(diag) >= {"reading_mismatch", "mismatch_bound", "flagged", "dt"}
    assert diag["flagged"] == (diag["reading_mismatch"] > diag["mismatch_bound"])


def test_oracle_form_coercive(general32, rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OracleWarning)
        Lam = dtn_from_extension(general32, 1.0, TruncatedCylinder(12.0, 256)).matrix
    g = general32.grid
    nu1 = coeffs.check_ellipticity(general32).nu1
    for f in g.random_bandlimited(rng, 10, mean_zero=True):
        # Re <Lambda f, f> >= nu1 ||grad E f||^2 >= nu1 * (trace bound) ||f||_{H^1/2}^2 / 2
        assert np.real(np.vdot(f, Lam @ f)) * g.weight >= 0.25 * nu1 * g.sobolev_norm(f, 0.5) ** 2


def test_dirichlet_without_forcing_is_extension(herm32, rng):
    cyl = TruncatedCylinder(6.0, 128)
    g = herm32.grid.random_bandlimited(rng)
    a = direct_bvp(herm32, None, g, "dirichlet", 1.0, cyl)
    b = direct_extension(herm32, g, 1.0, cyl)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", ["dirichlet", "neumann"])
def test_manufactured_solution_order(general32, kind):
    f, F, exact, flux0 = _manufactured(general32)
    Ms = [64, 128, 256]
    errs = []
    for M in Ms:
        cyl = TruncatedCylinder(T_END, M)
        datum = f if kind == "dirichlet" else flux0
        u = direct_bvp(general32, F, datum, kind, 1.0, cyl)
        errs.append(np.max(np.abs(u - exact(cyl.t))))
    assert errs[-1] < 1e-3
    assert 1.8 <= _slope(errs, Ms) <= 2.2


def test_hermitian_system_is_hermitian(herm32):
    sys = CylinderSystem(assemble(herm32, 1.0), TruncatedCylinder(5.0, 64))
    Mx = sys.matrix
    assert abs(Mx - Mx.conj().T).max() <= 1e-10 * abs(Mx).max()


def test_truncation_sensitivity(herm32):
    pair = poisson_pair(herm32, 1.0)
    gap = pair.spectral_gap()
    T1 = 4.0 / gap
    M = 256
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OracleWarning)
        a = dtn_from_extension(herm32, 1.0, TruncatedCylinder(T1, M)).matrix
        b = dtn_from_extension(herm32, 1.0, TruncatedCylinder(2 * T1, 2 * M)).matrix
    change = np.linalg.norm(a - b, 2) / np.linalg.norm(a, 2)
    assert change <= 10 * math.exp(-gap * T1)


def test_extension_energy_hermitian(herm32, rng):
    sys = CylinderSystem(assemble(herm32, 1.0), TruncatedCylinder(6.0, 128))
    u = sys.solve("dirichlet", g=herm32.grid.random_bandlimited(rng))
    e = extension_energy(sys, u)
    assert e.real > 0 and abs(e.imag) <= 1e-10 * e.real


def test_unknown_kind_rejected(herm32):
    sys = CylinderSystem(assemble(herm32, 1.0), TruncatedCylinder(6.0, 64))
    with pytest.raises(ValueError):
        sys.solve("robin", g=np.zeros(32))
