"""graydg: asymptotic-preserving nodal DG-IMEX gray radiative transfer.

A numpy/scipy library implementing a micro-macro decomposed
discrete-ordinates solver with weighted diffusive penalization, IMEX
Runge-Kutta time stepping, a Picard predictor-corrector for the
nonlinear material coupling, and a nonlinear-diffusion reference solver
for the thick limit.
"""

__version__ = "0.1.0"

from .angular import AngularQuadrature, angular_average, gauss_legendre, \
    legendre_chebyshev
from .mesh import NodalBasis, StructuredMesh, integrate, node_coords, \
    project, quad_weights, trace_values
from .operators import FLUX_ALT_LR, FLUX_ALT_RL, FLUX_CENTRAL, \
    DGOperators, assemble_operators, apply_interface_policy, \
    double_minmod_limit

__all__ = [
    "AngularQuadrature", "angular_average", "gauss_legendre",
    "legendre_chebyshev", "NodalBasis", "StructuredMesh", "integrate",
    "node_coords", "project", "quad_weights", "trace_values",
    "FLUX_ALT_LR", "FLUX_ALT_RL", "FLUX_CENTRAL", "DGOperators",
    "assemble_operators", "apply_interface_policy", "double_minmod_limit",
    "__version__",
]
