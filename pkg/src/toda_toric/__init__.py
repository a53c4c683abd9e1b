"""Periodic Toda lattice, Floquet theory and action variables, with toric-domain experiments."""

__version__ = "0.1.0"

from .dynamics import FlaschkaPoint, PhasePoint, flaschka, flaschka_inverse
from .errors import NumericalAbort, TodaToricError
from .geometry import Region
from .spectral import band_structure, dirichlet_data, toda_eigenvalues

__all__ = [
    "FlaschkaPoint",
    "NumericalAbort",
    "PhasePoint",
    "Region",
    "TodaToricError",
    "band_structure",
    "dirichlet_data",
    "flaschka",
    "flaschka_inverse",
    "toda_eigenvalues",
]
