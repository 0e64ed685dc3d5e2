"""Factor the t-independent operator into decaying and growing first-order parts.

For the Laplacian the decaying root is sqrt(-d_x^2 + lam), a Fourier
multiplier, so its eigenvalues can be read off directly.  For a variable
Hermitian field we only have residuals to show.
"""

import numpy as np

from halfspace import coeffs
from halfspace.grid import make_grid
from halfspace.pencil import dtn_from_pencil, poisson_pair

grid = make_grid(1, 32)

pair = poisson_pair(coeffs.identity(grid), 1.0)
mu = np.sort(pair.root.mu.real)
k = np.sort(np.abs(grid.k[0]))
print("Laplacian, lam = 1")
print("  smallest decay rates:", np.round(mu[:5], 6))
print("  sqrt(k^2 + 1)       :", np.round(np.sqrt(k[:5] ** 2 + 1), 6))

A = coeffs.hermitian_sample(grid, seed=3)
rep = coeffs.check_ellipticity(A)
print(f"\nHermitian sample, ellipticity nu1 = {rep.nu1:.3f}, nu2 = {rep.nu2:.3f}")
for lam in (1.0, 0.0):
    pair = poisson_pair(A, lam)
    Lam = dtn_from_pencil(pair).matrix
    herm = np.linalg.norm(Lam - Lam.conj().T) / np.linalg.norm(Lam)
    print(f"  lam = {lam}: factorization residual {pair.factorization_residual():.2e}, "
          f"spectral gap {pair.spectral_gap():.3f}, DtN skew part {herm:.2e}")
