"""Planted pancake-mixture instances, their exact oracle classifier, and a verification harness."""

from ._accel import backend_name
from .instance import MixtureParams, desk_params, generate_mixture, generate_null
from .samplers import CLWEParams, HCLWESpec, ParameterError

__version__ = "0.1.0"

__all__ = [
    "CLWEParams",
    "HCLWESpec",
    "MixtureParams",
    "ParameterError",
    "backend_name",
    "desk_params",
    "generate_mixture",
    "generate_null",
]
