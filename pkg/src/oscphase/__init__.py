"""Phase definitions for planar stochastic oscillators.

Computes and cross-validates the mean-return-time phase, the spectral
(stochastic asymptotic) phase, and the geometric correction relating
them, with matched finite-difference and Monte Carlo backends.
"""
from .errors import (DivergenceError, GridError, InterpolationError,
                     NonOscillatoryError, OscphaseError, ParameterDomainError,
                     PhaselessRegionError, ReturnTimeoutError,
                     SingularOperatorError)
from .grid import AnnulusGrid, ComplexField, ScalarField, build_grid
from .models import (LinearFocusParams, OscillatorModel, StuartLandauParams,
                     make_deterministic_stuart_landau, make_linear_focus,
                     make_stuart_landau, model_from_config, model_to_config)
from .pipeline import PhaseSolution, solve_phase
from .verify import VerificationReport, VerifySettings, run_identity_suite

__version__ = "0.1.0"

__all__ = [
    "OscphaseError", "ParameterDomainError", "GridError", "DivergenceError",
    "ReturnTimeoutError", "SingularOperatorError", "NonOscillatoryError",
    "PhaselessRegionError", "InterpolationError",
    "AnnulusGrid", "ScalarField", "ComplexField", "build_grid",
    "OscillatorModel", "StuartLandauParams", "LinearFocusParams",
    "make_stuart_landau", "make_linear_focus",
    "make_deterministic_stuart_landau", "model_to_config", "model_from_config",
    "PhaseSolution", "solve_phase",
    "VerificationReport", "VerifySettings", "run_identity_suite",
    "__version__",
]
