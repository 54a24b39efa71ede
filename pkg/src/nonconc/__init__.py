"""Nonconcentration inequalities for polynomial functionals.

Exact polynomial algebra (``poly``), the Jacobian functional of a polynomial
family (``geometry``), diagonal vanishing (``diagonal``), the Hausdorff-type
density and its positivity test (``density``), Monte Carlo functionals
(``functionals``), covering estimates (``hausdorff``), averaging-operator
checks (``radon``) and built-in examples (``gallery``).
"""

from .density import density_infimum, multisystem_density, positivity_criterion, triangular_determinantal_bound
from .diagonal import order_of_vanishing
from .functionals import Box, chebyshev_set, constant_sweep, int_functional, sup_functional
from .geometry import GammaSpec, PhiSpec, build_phi_graph, build_phi_jacobian, build_phi_wedge
from .hausdorff import cover_upper, density_comparability_check
from .poly import Polynomial, PolyVector
from .radon import apply_operator, build_omega_tilde, lp_ratio_check

__version__ = "0.1.0"

__all__ = [
    "Box",
    "GammaSpec",
    "PhiSpec",
    "PolyVector",
    "Polynomial",
    "apply_operator",
    "build_omega_tilde",
    "build_phi_graph",
    "build_phi_jacobian",
    "build_phi_wedge",
    "chebyshev_set",
    "constant_sweep",
    "cover_upper",
    "density_comparability_check",
    "density_infimum",
    "int_functional",
    "lp_ratio_check",
    "multisystem_density",
    "order_of_vanishing",
    "positivity_criterion",
    "sup_functional",
    "triangular_determinantal_bound",
]
