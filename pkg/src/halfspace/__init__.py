"""Spectral factorization of t-independent elliptic operators on the half-space.

The tangential variable lives on a periodic grid (d = 1 or 2); the normal
variable t >= 0 is continuous.  The main entry points are

- :func:`halfspace.pencil.poisson_pair` for the Poisson operators P and Q,
- :mod:`halfspace.semigroup` for exp(-tP) and its estimates,
- :mod:`halfspace.identities` for the Rellich and weak-form identities,
- :mod:`halfspace.bvp` for mild Dirichlet and Neumann solutions,
- :mod:`halfspace.oracle` for an independent truncated-cylinder solver.
"""

__version__ = "0.1.0"

from .coeffs import CoefficientField, check_ellipticity
from .grid import Grid, make_grid
from .pencil import PoissonPair, assemble, dtn_from_pencil, poisson_pair, solve_pencil
from .semigroup import SemigroupEvaluator

__all__ = [
    "CoefficientField",
    "Grid",
    "PoissonPair",
    "SemigroupEvaluator",
    "assemble",
    "check_ellipticity",
    "dtn_from_pencil",
    "make_grid",
    "poisson_pair",
    "solve_pencil",
]
