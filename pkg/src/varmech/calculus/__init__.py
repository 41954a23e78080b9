"""Differentiable scalar fields, quadrature and the expression language."""

from .expression import Expression, parse_expression, to_source
from .fields import ScalarField, directional, fd_step, partial_q, partial_qdot
from .quadrature import gauss_legendre_panel, integrate_time

__all__ = [
    "Expression",
    "parse_expression",
    "to_source",
    "ScalarField",
    "partial_q",
    "partial_qdot",
    "directional",
    "fd_step",
    "integrate_time",
    "gauss_legendre_panel",
]
