"""Lagrange interpolation series in radial weighted Fock spaces.

Numerical tools for sine-type generating functions on the critical square
lattice, interpolation partial sums, Cauchy remainders over perturbed
circles, weighted norms, and the Taylor-block divergence witness.
"""

__version__ = "0.1.0"

from .weights import RadialWeight, ModifiedWeight, phi, rho, phi_beta, d_rho
from .logcomplex import LogComplex
from .lattice import ZeroSet, square_lattice, separation, dist_to_set, remove_zero
from .genfun import SineType, sigma_lattice, sigma_over_linear

__all__ = [
    "RadialWeight",
    "ModifiedWeight",
    "phi",
    "rho",
    "phi_beta",
    "d_rho",
    "LogComplex",
    "ZeroSet",
    "square_lattice",
    "separation",
    "dist_to_set",
    "remove_zero",
    "SineType",
    "sigma_lattice",
    "sigma_over_linear",
]
