"""Coherence vortices of mixed one-dimensional scattering states."""
from .coherence import (
    Axis,
    CoherenceField,
    Ensemble,
    analytic_step_G,
    assemble,
    grid,
    intensity,
    mixture,
    normalize,
    step_mixture,
)
from .fringes import FringePattern, pattern, ratchet_scan, square_loop
from .potential import PotentialProfile, free_space, make_step, region_index
from .scattering import ScatteringState, evaluate, solve, step_coefficients, wavevector
from .singularity import (
    AngleShifts,
    VortexSite,
    analytic_lattice,
    angle_shifts,
    contour_circulation,
    detect,
    plaquette_winding,
)

__version__ = "0.1.0"
