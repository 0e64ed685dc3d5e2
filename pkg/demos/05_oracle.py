"""Independent check: finite elements in t on a truncated cylinder.

The DtN map read off the finite element extension converges to the one from
the factorization at second order in the mesh width.
"""

import warnings

import numpy as np

from halfspace import coeffs
from halfspace.grid import make_grid
from halfspace.oracle import OracleWarning, TruncatedCylinder, dtn_from_extension
from halfspace.pencil import dtn_from_pencil, poisson_pair
from halfspace.profiles import Bump, SeparableField
from halfspace.suite import mild_oracle_comparison

grid = make_grid(1, 32)
A = coeffs.hermitian_sample(grid, seed=0)
pair = poisson_pair(A, 1.0)
ref = dtn_from_pencil(pair).matrix

prev = None
for M in (256, 512, 1024):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OracleWarning)
        Lam = dtn_from_extension(A, 1.0, TruncatedCylinder.for_pair(pair, M)).matrix
    err = np.linalg.norm(Lam - ref) / np.linalg.norm(ref)
    rate = "" if prev is None else f"  (ratio {prev / err:.2f})"
    print(f"M = {M:5d}: relative DtN error {err:.3e}{rate}")
    prev = err

F = SeparableField(grid, [(grid.random_bandlimited(np.random.default_rng(0)), Bump(0.5, 2.5))])
out = mild_oracle_comparison(A, F, 1.0, (512, 1024), pair=pair)
print(f"mild solution vs oracle: distance {out['error']:.2e}, budget {out['budget']:.2e}")
