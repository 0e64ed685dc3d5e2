"""Rellich identities and the square-root equivalence of norms.

The boundary energy of the Poisson extension of f is an exact quadratic
form in f; the residual printed here is round-off.  Kato ratios
||sqrt(T) f|| / ||grad f|| stay between sqrt(nu1) and sqrt(nu2).
"""

import numpy as np

from halfspace import coeffs
from halfspace.grid import make_grid
from halfspace.identities import norm_equivalence, rellich_general, rellich_hermitian
from halfspace.pencil import assemble, kato_check, poisson_pair

grid = make_grid(1, 32)
rng = np.random.default_rng(7)

A = coeffs.hermitian_sample(grid, seed=1)
pair = poisson_pair(A, 1.0)
worst = max(rellich_hermitian(A, f, 1.0, pair).rel_residual for f in grid.random_bandlimited(rng, 10))
print(f"Hermitian Rellich identity, worst relative residual over 10 data: {worst:.2e}")

B = coeffs.random_elliptic_sample(grid, seed=1)
pairB = poisson_pair(B, 1.0)
fs, gs = grid.random_bandlimited(rng, 10), grid.random_bandlimited(rng, 10)
worst = max(rellich_general(B, f, g, 1.0, pairB).rel_residual for f, g in zip(fs, gs))
print(f"General Rellich identity, worst relative residual over 10 pairs: {worst:.2e}")

ratios = norm_equivalence(A, trials=50, seed=0, lam=0.0)
for key, (lo, hi) in ratios.items():
    print(f"norm ratio range ({key}): [{lo:.3f}, {hi:.3f}]")

rep = coeffs.check_ellipticity(A)
lo, hi = kato_check(assemble(A, 0.0), 50, 0)
print(f"Kato ratios [{lo:.3f}, {hi:.3f}] inside [{np.sqrt(rep.nu1):.3f}, {np.sqrt(rep.nu2):.3f}]")
