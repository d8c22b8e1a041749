from .assembly import (
    AssemblyError,
    ConfigurationError,
    apply_dirichlet,
    assemble_div,
    assemble_load,
    assemble_mass,
    assemble_skew_convection_scalar,
    assemble_skew_convection_vector,
    assemble_stiffness,
    boundary_dofs,
    boundary_values,
    constrain,
    evaluate_field,
)
from .quadrature import QuadratureRule, triangle_rule
from .space import FeSpace, Field, SpaceMismatch

__all__ = [
    "AssemblyError",
    "ConfigurationError",
    "FeSpace",
    "Field",
    "QuadratureRule",
    "SpaceMismatch",
    "apply_dirichlet",
    "assemble_div",
    "assemble_load",
    "assemble_mass",
    "assemble_skew_convection_scalar",
    "assemble_skew_convection_vector",
    "assemble_stiffness",
    "boundary_dofs",
    "boundary_values",
    "constrain",
    "evaluate_field",
    "triangle_rule",
]
