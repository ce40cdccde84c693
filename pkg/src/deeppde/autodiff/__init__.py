"""Taylor-jet forward mode over inputs nested in reverse mode over parameters."""

from .check import finite_difference_check
from .jet import Jet, constant_jet, exp, jet_linear, lift_input, log, maximum, softplus, tanh
from .kernels import available_backends, use_backend
from .tape import (
    DomainError,
    GradientTrace,
    Node,
    TraceError,
    parameter_gradient,
    reduce_sum,
    square,
    value_of,
)

DifferentiableScalar = Jet

__all__ = [
    "DifferentiableScalar",
    "DomainError",
    "GradientTrace",
    "Jet",
    "Node",
    "TraceError",
    "available_backends",
    "constant_jet",
    "exp",
    "finite_difference_check",
    "jet_linear",
    "lift_input",
    "log",
    "maximum",
    "parameter_gradient",
    "reduce_sum",
    "softplus",
    "square",
    "tanh",
    "use_backend",
    "value_of",
]
