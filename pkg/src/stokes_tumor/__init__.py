"""Stationary states, linear spectrum and linearised dynamics of a Stokes free-boundary tumour model."""

from .errors import (
    ContradictionError,
    DegreeOverflowError,
    NumericalError,
    SaturationError,
    TranslationModeError,
    TruncationError,
    ValidationError,
)
from .model import ModelFunctions, ModelParams, canonical_model, general_model, validate_assumptions
from .radial_stationary import RadialStationary, find_stationary, rescale_to_unit
from .mode_solver import ModeProfile, solve_mode
from .spectrum import SpectrumReport, alpha, compute_spectrum, full_spectrum, threshold
from .eigenmode_fields import EigenmodeFields, assemble_fields, boundary_data, residual_report, solve_constants
from .dynamics import PerturbationState, evolve, measured_rate, proxy_norm

__version__ = "0.1.0"
