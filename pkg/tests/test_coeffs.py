import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfspace import coeffs
from halfspace.coeffs import (CoefficientField, bilinear_estimate_scan, check_ellipticity,
                              check_symmetry_condition)
from halfspace.grid import make_grid


def test_identity_ellipticity(grid32):
    rep = check_ellipticity(coeffs.identity(grid32))
    assert rep.ok and rep.nu1 == pytest.approx(1) and rep.nu2 == pytest.approx(1)


def test_diagonal_ellipticity(grid32):
    rep = check_ellipticity(coeffs.constant(grid32, np.diag([2.0, 0.5])))
    assert rep.nu1 == pytest.approx(0.5) and rep.nu2 == pytest.approx(2.0)


@given(st.floats(-5, 5))
def test_skew_part_drops_from_coercivity(c):
    g = make_grid(1, 8)
    rep = check_ellipticity(coeffs.constant(g, [[1.0, c], [-c, 1.0]]))
    assert rep.nu1 == pytest.approx(1.0, abs=1e-12)
    assert rep.nu2 == pytest.approx(np.sqrt(1 + c * c), rel=1e-12)


def test_non_elliptic_is_reported_with_witness(grid32):
    rep = check_ellipticity(coeffs.constant(grid32, [[1.0, 2.0], [2.0, 1.0]]))
    assert not rep.ok
    assert rep.nu1 == pytest.approx(-1.0)
    v = rep.witness_vector
    M = np.array([[1.0, 2.0], [2.0, 1.0]])
    assert np.real(np.vdot(v, M @ v)) == pytest.approx(-1.0)


def test_block_builder_rejects_non_elliptic(grid32):
    with pytest.raises(ValueError, match="not elliptic"):
        coeffs.block(grid32, [[-1.0]])


def test_zero_corner_rejected(grid32):
    with pytest.raises(ValueError):
        coeffs.constant(grid32, [[1.0, 0.0], [0.0, 0.0]])


def test_symmetry_condition_examples(grid32):
    rep = check_symmetry_condition(coeffs.regular_offblock_sample(grid32, 0))
    assert rep.offblock_sum_real and rep.b_real
    v = np.sin(grid32.x[0])
    A = coeffs.from_blocks(grid32, [[1.0]], 1j * v[None], -1j * v[None], 1.0)
    assert check_symmetry_condition(A).offblock_sum_real
    B = coeffs.constant(grid32, [[1.0, 0.0], [0.0, 1 + 0.1j]])
    rep = check_symmetry_condition(B)
    assert not rep.b_real and rep.b_violation == pytest.approx(0.1)
    assert not rep.symmetric


def test_scan_trivial_cases(grid32):
    assert bilinear_estimate_scan(grid32, np.zeros(32)) == (0.0, 0.0)
    delta, C = bilinear_estimate_scan(grid32, np.full(32, 0.7))
    assert delta == pytest.approx(0.0, abs=1e-10)
    assert C == pytest.approx(0.7, rel=1e-10)


def test_scan_grows_with_dirac_mass():
    g = make_grid(1, 64)
    deltas = [bilinear_estimate_scan(g, w * coeffs.bump(g))[0] for w in (0.25, 1.0, 4.0)]
    assert deltas[0] < deltas[1] < deltas[2]


def test_scan_alpha_domain(grid32):
    with pytest.raises(ValueError):
        bilinear_estimate_scan(grid32, np.ones(32), alpha=1.0)


def test_builders_are_elliptic_and_reproducible(grid32):
    for build in (lambda: coeffs.hermitian_sample(grid32, 3),
                  lambda: coeffs.random_elliptic_sample(grid32, 3),
                  lambda: coeffs.regular_offblock_sample(grid32, 3),
                  lambda: coeffs.kkpt_probe(grid32, 2.0)):
        a, b = build(), build()
        ra, rb = check_ellipticity(a), check_ellipticity(b)
        assert ra.ok
        assert np.array_equal(a.A, b.A)
        assert ra.witness_index == rb.witness_index


def test_hermitian_sample_exact(grid32):
    A = coeffs.hermitian_sample(grid32, 0)
    assert A.hermitian_defect() == 0.0
    rep = check_ellipticity(A)
    assert rep.nu1 == pytest.approx(0.5, abs=1e-12) and rep.nu2 == pytest.approx(2.0, abs=1e-12)


def test_regular_offblock_meets_target(grid32):
    A = coeffs.regular_offblock_sample(grid32, 0, 0.1)
    assert np.all(A.A.imag == 0)
    assert bilinear_estimate_scan(grid32, A.divergence_r1())[0] <= 0.1
    assert bilinear_estimate_scan(grid32, A.divergence_r2())[0] <= 0.1


def test_kkpt_probe_structure(grid32):
    A = coeffs.kkpt_probe(grid32, 4.0)
    div = A.divergence_r2()
    assert np.all(A.A.imag == 0)
    assert np.allclose(A.r1, -A.r2)
    assert grid32.weight * np.sum(np.abs(div + 4.0 / grid32.L)) == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("seed", range(3))
def test_adjoint_has_same_constants(grid32, seed):
    A = coeffs.random_elliptic_sample(grid32, seed)
    r, rs = check_ellipticity(A), check_ellipticity(A.adjoint())
    assert r.nu1 == pytest.approx(rs.nu1, rel=1e-12)
    assert r.nu2 == pytest.approx(rs.nu2, rel=1e-12)


@given(st.integers(0, 1000))
def test_divergence_integration_by_parts(seed):
    g = make_grid(1, 32)
    rng = np.random.default_rng(seed)
    r = coeffs.smooth_field(g, rng, 3)
    f = g.random_bandlimited(rng, real=True)
    lhs = g.inner(g.divergence(r[None]) * f, f)
    rhs = -2 * np.real(g.inner(r * g.gradient(f)[0], f))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_serialization_roundtrip(tmp_path, grid32):
    A = coeffs.random_elliptic_sample(grid32, 1)
    A.save(tmp_path / "a.json")
    B = CoefficientField.load(tmp_path / "a.json")
    assert B.grid == A.grid and np.array_equal(B.A, A.A)
