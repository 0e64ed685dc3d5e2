import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from halfspace.grid import ZeroModeWarning, make_grid


def test_lattice_1d():
    g = make_grid(1, 16, 2 * np.pi)
    assert sorted(np.rint(g.k[0]).astype(int)) == list(range(-8, 8))


def test_lattice_2d_unit_period():
    g = make_grid(2, 8, 1.0)
    assert g.n == 64
    ratio = g.k / (2 * np.pi)
    assert np.allclose(ratio, np.rint(ratio))
    assert set(np.rint(ratio[0]).astype(int)) == set(range(-4, 4))


@pytest.mark.parametrize("d, N, L", [(1, 12, 1.0), (3, 16, 1.0), (1, 4, 1.0), (1, 16, 0.0)])
def test_rejects_bad_parameters(d, N, L):
    with pytest.raises(ValueError):
        make_grid(d, N, L)


def test_lattice_symmetric_except_nyquist():
    g = make_grid(1, 32)
    k = np.rint(g.k[0]).astype(int)
    unpaired = [x for x in k if -x not in k]
    assert unpaired == [-16]


@pytest.mark.parametrize("d, N", [(1, 32), (2, 16)])
def test_transform_roundtrip(d, N, rng):
    g = make_grid(d, N)
    f = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
    back = g.ifft(g.fft(f))
    assert np.linalg.norm(back - f) / np.linalg.norm(f) < 1e-12


def test_gradient_examples(grid16):
    x = grid16.x[0]
    assert np.max(np.abs(grid16.gradient(np.sin(x))[0] - np.cos(x))) < 1e-12
    assert np.max(np.abs(grid16.gradient(np.full(16, 3.0))[0])) < 1e-12
    e2 = np.exp(2j * x)
    assert np.max(np.abs(grid16.gradient(e2)[0] - 2j * e2)) < 1e-12


def test_sobolev_examples(grid32, rng):
    e1 = grid32.mode([1])
    assert grid32.sobolev_norm(e1, 0.5) == pytest.approx(grid32.l2_norm(e1), rel=1e-12)
    const = np.full(32, 2.0 + 0j)
    for s in (-0.5, 0.0, 0.5, 1.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroModeWarning)
            assert grid32.sobolev_norm(const, s) == 0.0
    f = grid32.random_bandlimited(rng)
    grad = np.sqrt(sum(grid32.l2_norm(c) ** 2 for c in grid32.gradient(f)))
    assert grid32.sobolev_norm(f, 1.0) == pytest.approx(grad, rel=1e-12)


def test_negative_order_constant_is_flagged(grid32):
    with pytest.warns(ZeroModeWarning):
        assert grid32.sobolev_norm(np.ones(32), -0.5) == 0.0


def test_sobolev_order_domain(grid32):
    with pytest.raises(ValueError):
        grid32.sobolev_norm(np.ones(32), 1.5)


def test_half_laplacian_examples(grid32, rng):
    e3 = grid32.mode([3])
    assert np.max(np.abs(grid32.half_laplacian(e3) - 3 * e3)) < 1e-12
    assert np.max(np.abs(grid32.half_laplacian(np.ones(32)))) < 1e-12
    f = grid32.random_bandlimited(rng)
    twice = grid32.half_laplacian(grid32.half_laplacian(f))
    assert np.linalg.norm(twice - grid32.multiplier(f, grid32.kabs**2)) < 1e-12 * np.linalg.norm(f) * 32**2


def test_parseval_100_fields(rng):
    g = make_grid(2, 16)
    fs = g.random_bandlimited(rng, 100)
    for f in fs:
        assert g.sobolev_norm(f, 0.0, homogeneous=False) == pytest.approx(g.l2_norm(f), rel=1e-12)


@given(s1=st.floats(-1, 1), s2=st.floats(-1, 1), seed=st.integers(0, 10_000))
def test_interpolation_monotone(s1, s2, seed):
    lo, hi = sorted((s1, s2))
    g = make_grid(1, 32)
    f = g.random_bandlimited(np.random.default_rng(seed), mean_zero=True)
    assert g.sobolev_norm(f, lo) <= g.sobolev_norm(f, hi) * (1 + 1e-12)


@pytest.mark.parametrize("L", [2 * np.pi, 3.0])
def test_gradient_inverts_antiderivative(L, rng):
    g = make_grid(1, 64, L)
    f = g.random_bandlimited(rng, mean_zero=True)
    back = g.gradient(g.antiderivative(f))[0]
    assert np.linalg.norm(back - f) / np.linalg.norm(f) < 1e-12


def test_resample_preserves_function(rng):
    coarse, fine = make_grid(1, 32), make_grid(1, 64)
    f = coarse.random_bandlimited(rng)
    ff = fine.resample(f, coarse)
    assert np.allclose(ff[::2], f, atol=1e-13)
    assert fine.l2_norm(ff) == pytest.approx(coarse.l2_norm(f), rel=1e-12)
    with pytest.raises(ValueError):
        coarse.resample(ff, fine)


def test_dense_matrices_match_operators(rng):
    g = make_grid(2, 8)
    f = g.random_bandlimited(rng)
    assert np.allclose(g.diff_matrix(1) @ f, g.gradient(f)[1], atol=1e-12)
    assert np.allclose(g.abs_derivative_matrix(1.0) @ f, g.half_laplacian(f), atol=1e-12)
