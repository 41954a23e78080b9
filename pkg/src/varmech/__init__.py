"""Virtual work in statics and the virtual action principle in dynamics.

Typed affine geometry, forward-mode differentiation, adaptive quadrature,
interval and Dirac formulations of Lagrangian dynamics, and the Legendre
transformation to Hamiltonian form.
"""

from .affine import AffineSpace, Covector, Metric, Point, Vector, difference, displace, pair
from .calculus import ScalarField, integrate_time, parse_expression
from .distributions import Dirac, Interval, PhasePoint4
from .dynamics import (
    PhaseTrajectory,
    action,
    action_derivative_by_parts,
    action_derivative_direct,
    dynamics_membership,
    lagrange_residuals,
    script_D_consistency,
    solve_forward,
    variational_membership,
)
from .hamiltonian import HamiltonianSystem, hamiltonian_value, legendre, legendre_inverse
from .models import LagrangianSystem, StaticSystem
from .statics import solve_equilibrium
from .systems import HarmonicParams, make_lagrangian_oscillator, make_static_oscillator, make_system_from_config
from .trajectory import CovectorCurve, CovectorTriple, Displacement, Motion

__version__ = "0.1.0"

__all__ = [
    "AffineSpace",
    "Point",
    "Vector",
    "Covector",
    "Metric",
    "pair",
    "displace",
    "difference",
    "ScalarField",
    "parse_expression",
    "integrate_time",
    "StaticSystem",
    "LagrangianSystem",
    "solve_equilibrium",
    "Motion",
    "Displacement",
    "CovectorCurve",
    "CovectorTriple",
    "Interval",
    "Dirac",
    "PhasePoint4",
    "PhaseTrajectory",
    "action",
    "action_derivative_direct",
    "action_derivative_by_parts",
    "dynamics_membership",
    "variational_membership",
    "solve_forward",
    "lagrange_residuals",
    "script_D_consistency",
    "HamiltonianSystem",
    "legendre",
    "legendre_inverse",
    "hamiltonian_value",
    "HarmonicParams",
    "make_static_oscillator",
    "make_lagrangian_oscillator",
    "make_system_from_config",
]
