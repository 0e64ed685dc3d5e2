import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfspace import coeffs
from halfspace.grid import make_grid
from halfspace.identities import (IdentityReport, QuadratureWarning, SemigroupOrbit,
                                  hermitian_energy_check, norm_equivalence, refinement_fields,
                                  rellich_general, rellich_hermitian, summarize, weak_form_identity)
from halfspace.pencil import poisson_pair
from halfspace.profiles import Bump, SeparableField, SmoothBump


def test_report_relative_residual_convention():
    r = IdentityReport("x", 2.0, 1.0)
    assert r.rel_residual == 0.5
    assert IdentityReport("z", 0.0, 0.0).rel_residual == 0.0
    assert IdentityReport("t", 1e-31, 0.0).rel_residual == pytest.approx(0.1)


def test_rellich_laplacian_single_mode(grid32):
    A = coeffs.identity(grid32)
    f = grid32.mode([3])
    r = rellich_hermitian(A, f, 0.0)
    assert r.left.real == pytest.approx(9 * grid32.l2_norm(f) ** 2, rel=1e-12)
    assert r.rel_residual <= 1e-12


def test_rellich_diagonal_constants(grid32):
    a, b = 2.0, 0.5
    A = coeffs.constant(grid32, np.diag([a, b]))
    f = grid32.mode([2])
    r = rellich_hermitian(A, f, 0.0)
    assert r.right.real == pytest.approx(a * 4 * grid32.l2_norm(f) ** 2, rel=1e-12)
    assert r.rel_residual <= 1e-12


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_rellich_hermitian_sample(herm32, lam):
    rng = np.random.default_rng(11)
    pair = poisson_pair(herm32, lam)
    for f in herm32.grid.random_bandlimited(rng, 20, mean_zero=(lam == 0)):
        assert rellich_hermitian(herm32, f, lam, pair).rel_residual <= 1e-8


def test_rellich_hermitian_rejects_general(general32):
    with pytest.raises(ValueError, match="not Hermitian"):
        rellich_hermitian(general32, np.ones(32), 1.0)


def test_pair_mismatch_rejected(herm32, general32):
    pair = poisson_pair(herm32, 1.0)
    with pytest.raises(ValueError):
        rellich_general(general32, np.ones(32), np.ones(32), 1.0, pair)
    with pytest.raises(ValueError):
        rellich_general(herm32, np.ones(32), np.ones(32), 0.5, pair)


def test_rellich_general_laplacian(grid32, rng):
    A = coeffs.identity(grid32)
    f, g = grid32.random_bandlimited(rng, 2)
    assert rellich_general(A, f, g, 1.0).rel_residual <= 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_rellich_general_random(grid32, seed):
    A = coeffs.random_elliptic_sample(grid32, seed)
    pair = poisson_pair(A, 1.0)
    rng = np.random.default_rng(seed)
    for f, g in zip(*grid32.random_bandlimited(rng, 40).reshape(2, 20, -1)):
        assert rellich_general(A, f, g, 1.0, pair).rel_residual <= 1e-8


@given(st.integers(0, 1000))
def test_rellich_general_reduces_to_hermitian(seed):
    g = make_grid(1, 16)
    A = coeffs.hermitian_sample(g, seed % 5)
    f = g.random_bandlimited(np.random.default_rng(seed))
    a = rellich_general(A, f, f, 1.0)
    b = rellich_hermitian(A, f, 1.0)
    assert abs(a.right - b.right) <= 1e-10 * abs(b.right)


def _plancherel_case(grid):
    k = 2
    u = SeparableField(grid, [(grid.mode([k]), Bump(0.5, 2.0))])
    t, w = np.polynomial.legendre.leggauss(40)
    t = 0.5 * 1.5 * t + 1.25
    w = 0.5 * 1.5 * w
    p = Bump(0.5, 2.0)
    expected = grid.L * np.sum(w * (k**2 * p(t) ** 2 + p.derivative(t) ** 2 + p(t) ** 2))
    return u, expected


def test_weak_form_plancherel(grid32):
    A = coeffs.identity(grid32)
    u, expected = _plancherel_case(grid32)
    r = weak_form_identity(A, u, u, 1.0)
    assert r.left.real == pytest.approx(expected, rel=1e-12)
    assert r.rel_residual <= 1e-8


def test_weak_form_half_line_orbit(herm32, rng):
    pair = poisson_pair(herm32, 1.0)
    u = SemigroupOrbit(pair, herm32.grid.random_bandlimited(rng))
    v = SemigroupOrbit(pair, herm32.grid.random_bandlimited(rng), adjoint=True)
    r = weak_form_identity(herm32, u, v, 1.0, half_line=True, pair=pair)
    assert r.rel_residual <= 1e-6


def _random_field(grid, rng, t0=0.0):
    fs = grid.random_bandlimited(rng, 3)
    items = []
    for f in fs:
        a = t0 + rng.uniform(0, 1.0)
        items.append((f, Bump(a, a + rng.uniform(0.5, 2.0))))
    return SeparableField(grid, items)


@pytest.mark.parametrize("half_line", [False, True])
def test_weak_form_random_fields(general32, half_line):
    rng = np.random.default_rng(5)
    u, v = _random_field(general32.grid, rng), _random_field(general32.grid, rng)
    if half_line:
        u = u + SeparableField(general32.grid, [(general32.grid.random_bandlimited(rng), Bump(-1.0, 1.0))])
    r = weak_form_identity(general32, u, v, 1.0, half_line=half_line)
    assert r.rel_residual <= 1e-6


@given(shift=st.floats(0.0, 5.0), seed=st.integers(0, 100))
def test_weak_form_translation_invariant(general32, shift, seed):
    rng = np.random.default_rng(seed)
    u, v = _random_field(general32.grid, rng, 1.0), _random_field(general32.grid, rng, 1.0)
    a = weak_form_identity(general32, u, v, 1.0)
    b = weak_form_identity(general32, u.shifted(shift), v.shifted(shift), 1.0)
    assert abs(a.left - b.left) <= 1e-10 * max(1.0, abs(a.left))
    assert abs(a.right - b.right) <= 1e-10 * max(1.0, abs(a.right))


def test_weak_form_full_line_requires_compact(herm32, rng):
    pair = poisson_pair(herm32, 1.0)
    u = SemigroupOrbit(pair, herm32.grid.random_bandlimited(rng))
    with pytest.raises(ValueError):
        weak_form_identity(herm32, u, u, 1.0, half_line=False, pair=pair)


def test_quadrature_warning_when_unresolved(grid32, rng):
    A = coeffs.identity(grid32)
    u = SeparableField(grid32, [(grid32.random_bandlimited(rng), SmoothBump(0.0, 1.0))])
    with pytest.warns(QuadratureWarning):
        weak_form_identity(A, u, u, 1.0, order=4)
    with warnings.catch_warnings():
        warnings.simplefilter("error", QuadratureWarning)
        weak_form_identity(A, u, u, 1.0, order=16, max_width=0.1)


def test_residuals_shrink_under_refinement(grid32, rng):
    A = coeffs.identity(grid32)
    u = SeparableField(grid32, [(grid32.random_bandlimited(rng), SmoothBump(0.0, 1.0))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        coarse = weak_form_identity(A, u, u, 1.0, order=8, max_width=0.5).rel_residual
    fine = weak_form_identity(A, u, u, 1.0, order=16, max_width=0.1).rel_residual
    assert fine <= max(coarse, 1e-12)


def test_norm_equivalence_laplacian(grid32):
    A = coeffs.identity(grid32)
    modes = np.stack([grid32.mode([k]) for k in (1, 4, 9)])
    out = norm_equivalence(A, fields=modes)
    assert out["dtn"] == pytest.approx((1.0, 1.0), rel=1e-10)


def test_norm_equivalence_hermitian_refinement():
    coarse, fine = make_grid(1, 32), make_grid(1, 64)
    fc, ff = refinement_fields(coarse, fine, 50)
    a = norm_equivalence(coeffs.hermitian_sample(coarse, 0), fields=fc)
    b = norm_equivalence(coeffs.hermitian_sample(fine, 0), fields=ff)
    for key in ("dtn", "poisson"):
        for x, y in zip(a[key], b[key]):
            assert 0.1 <= x <= 10
            assert abs(x - y) <= 0.2 * x


def test_norm_equivalence_kkpt_spread_reported(grid32):
    out = norm_equivalence(coeffs.kkpt_probe(grid32, 8.0))
    lo, hi = out["dtn"]
    assert 0 < lo <= hi < math.inf


def test_hermitian_energy_matches_oracle(herm32, rng):
    g = herm32.grid.random_bandlimited(rng, fraction=0.5)
    r = hermitian_energy_check(herm32, g, 1.0, M=1024)
    assert abs(r.left.imag) <= 1e-10 * abs(r.left)
    assert r.rel_residual <= 1e-3


def test_summarize_per_case(grid32, rng):
    A = coeffs.identity(grid32)
    reps = [rellich_general(A, *grid32.random_bandlimited(rng, 2), 1.0, case_id=c) for c in "aab"]
    out = summarize(reps)
    assert set(out) == {"a", "b"}
