"""Penalized fluid/beam splitting scheme on an extended domain, with contact
penalization and inequality diagnostics."""

from pfsi.core import (
    BeamState,
    FluidState,
    GridSpec,
    PhysParams,
    SchemeParams,
    StabilityError,
    beam_derivatives,
    integrate_field,
    trace_velocity,
)

__all__ = [
    "BeamState",
    "FluidState",
    "GridSpec",
    "PhysParams",
    "SchemeParams",
    "StabilityError",
    "beam_derivatives",
    "integrate_field",
    "trace_velocity",
]

__version__ = "0.1.0"
