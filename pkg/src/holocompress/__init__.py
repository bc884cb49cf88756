"""Holographic compression of lattice states with area-law entanglement."""

__version__ = "0.1.0"

from .lattice import Lattice, Region, boundary_width_function, lattice_distance, parse_region, thickened_boundary

__all__ = [
    "__version__",
    "Lattice",
    "Region",
    "lattice_distance",
    "thickened_boundary",
    "boundary_width_function",
    "parse_region",
]
