"""Layered Muskat interfaces: linear spectrum, contour quadrature,
nonlinear series, time integration and decay diagnostics."""
from .core import (FluidConfig, InterfaceState, SpectralGrid, SpectrumField,
                   forward_transform, initial_profile, inverse_transform,
                   validate_config)
from .errors import MuskatError

__version__ = "0.1.0"

__all__ = [
    "FluidConfig", "InterfaceState", "SpectralGrid", "SpectrumField",
    "forward_transform", "inverse_transform", "initial_profile",
    "validate_config", "MuskatError",
]
