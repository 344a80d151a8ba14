"""Minimal resistance of axisymmetric bodies in a rarefied flow.

Modules
-------
kernels  resistance kernels and their convex envelopes
solver   optimal convex-hull profiles and minimal resistance
billiard generator curves, vertical billiard rays, resistance quadrature
zigzag   nonconvex minimizing sequences and single-impact chain bodies
cli      command-line front end
"""

from .errors import (DomainError, InputError, MinResistError, NumericError,
                     ParameterError, RegimeError, RegularityError)
from .kernels import Kernel, convexify, eval_kernel, upsilon, upsilon_primitive
from .solver import (M_STAR, ProfileSolution, asymptotic_R, asymptotic_x0,
                     minimal_resistance, newton_parametric, pontryagin_check,
                     single_impact_R0, solve, solve_multiplier)

__version__ = "1.0.0"

__all__ = [
    "DomainError", "InputError", "Kernel", "M_STAR", "MinResistError", "NumericError",
    "ParameterError", "ProfileSolution", "RegimeError", "RegularityError", "asymptotic_R",
    "asymptotic_x0", "convexify", "eval_kernel", "minimal_resistance", "newton_parametric",
    "pontryagin_check", "single_impact_R0", "solve", "solve_multiplier", "upsilon",
    "upsilon_primitive",
]
