"""Dirichlet and Neumann problems on the half-space, built from the semigroup.

The forcing is a compactly supported bump in t, so beyond its support the
solution is again a free Poisson extension and decays at the gap rate.
"""

import numpy as np

from halfspace import bvp, coeffs
from halfspace.grid import make_grid
from halfspace.pencil import poisson_pair
from halfspace.profiles import Bump, SeparableField

grid = make_grid(1, 32)
A = coeffs.hermitian_sample(grid, seed=0)
rng = np.random.default_rng(2)
g = grid.random_bandlimited(rng)
F = SeparableField(grid, [(grid.random_bandlimited(rng, mean_zero=True), Bump(0.5, 2.5))])
t = np.concatenate([[0.0], np.logspace(-2, 1.5, 36)])
pair = poisson_pair(A, 1.0)

sol = bvp.solve_dirichlet_inhomogeneous(A, F, 1.0, t, g, pair)
print("Dirichlet, lam = 1")
for i in range(0, len(t), 7):
    print(f"  t = {t[i]:8.4f}  ||u(t)|| = {sol.l2[i]:.6e}")
print(f"  trace error at t = 0: {np.max(np.abs(sol.u[0] - g)):.1e}")
tests = bvp.random_test_fields(grid, 20, seed=3)
print(f"  worst weak-form residual on 20 test fields: {bvp.weak_residual(A, F, 1.0, tests, pair, g=g).max():.2e}")

neu = bvp.solve_neumann(A, g, F, 1.0, t, pair)
print(f"\nNeumann, lam = 1: conormal flux error {neu.diagnostics['flux_error']:.2e}")

hls = bvp.hls_solvability_run(A, 2, 0.75, np.concatenate([[0.0], np.logspace(-3, 2, 61)]), 0.0)
print(f"Power-law forcing with p = 2, r = 3/4: q = {hls['q']:.3g}, "
      f"||grad u||_q = {hls['grad_lq_norm']:.4f}")
