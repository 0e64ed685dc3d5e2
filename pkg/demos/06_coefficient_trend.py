"""How estimates degrade as a non-Hermitian perturbation grows.

The probe field is real and nonsymmetric, with off-diagonal blocks whose
divergence is concentrated with mass w.  Larger w pushes the semigroup norm
toward 1 and widens the spread of DtN norm ratios.
"""

from halfspace import coeffs
from halfspace.grid import make_grid
from halfspace.identities import norm_equivalence
from halfspace.pencil import poisson_pair
from halfspace.semigroup import DEFAULT_T_GRID, SemigroupEvaluator, measure_decay

grid = make_grid(1, 32)
print("    w   sup||e^{-tP}||   DtN ratio spread   condition")
for w in (0.5, 2.0, 8.0):
    A = coeffs.kkpt_probe(grid, w)
    pair = poisson_pair(A, 1.0)
    sup = measure_decay(SemigroupEvaluator(pair), (), DEFAULT_T_GRID).norms["L2"].max()
    lo, hi = norm_equivalence(A, 50, 0, 0.0)["dtn"]
    print(f"{w:5.1f}   {sup:14.5f}   {hi / lo:16.3f}   {pair.root.cond:9.3g}")
