"""Allen-Cahn generation and motion of interfaces: solvers, sharp-interface limits and checks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .nonlinearity import (BistableNonlinearity, balance_residual, from_functions, from_polynomial,  # noqa: F401
                           make_cubic, perturb, potential_W, scaled)
from .profile import ProfileData, compute_profile, surface_constant_c0  # noqa: F401
from .corrector import (CorrectorField, PerturbationG, constant_g, corrector_U1, custom_g,  # noqa: F401
                        fredholm_solve, solvability_residual, zero_g)
from .grid import Field, Grid  # noqa: F401
