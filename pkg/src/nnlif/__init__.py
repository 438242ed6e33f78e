"""Numerical laboratory for the time-dilated mean-field
integrate-and-fire Fokker-Planck equation: global solver in the dilated
timescale, generalized-solution reconstruction through firing-rate
blow-ups, closed-form steady states, entropy diagnostics, and the
free-boundary cross-checks.
"""

from .errors import (
    ConfigurationError,
    HorizonError,
    InvariantError,
    NnlifError,
    NumericalIntegrityError,
    OutOfLifespanError,
    ResolutionError,
    SchemeIntegrityError,
)
from .grid import DensityProfile, Grid, boundary_slope, build_grid, gaussian_profile, project_function, total_mass
from .kernels import BACKEND
from .model import (
    DilationParams,
    ModelParams,
    Regime,
    classify_regime,
    drift_hypothesis_check,
    firing_rate_from_slope,
    invert_tilde_n,
    tilde_n_from_M,
    tilde_n_from_slope,
)
from .solver import StepperConfig, TauTrajectory, flux_jump_residual, run_limit_equation, run_tau, step_tau
from .steady import SteadyState, reference_ratio, steady_excitatory, steady_inhibitory, steady_numeric, steady_state
from .timescale import (
    BlowupEvent,
    LifespanStatus,
    TimeMap,
    detect_blowups,
    forward_time,
    inverse_time,
    lifespan,
    sample_generalized,
    verify_jump,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlowupEvent",
    "ConfigurationError",
    "DensityProfile",
    "DilationParams",
    "Grid",
    "HorizonError",
    "InvariantError",
    "LifespanStatus",
    "ModelParams",
    "NnlifError",
    "NumericalIntegrityError",
    "OutOfLifespanError",
    "Regime",
    "ResolutionError",
    "SchemeIntegrityError",
    "StepperConfig",
    "SteadyState",
    "TauTrajectory",
    "TimeMap",
    "boundary_slope",
    "build_grid",
    "classify_regime",
    "detect_blowups",
    "drift_hypothesis_check",
    "firing_rate_from_slope",
    "flux_jump_residual",
    "forward_time",
    "gaussian_profile",
    "invert_tilde_n",
    "inverse_time",
    "lifespan",
    "project_function",
    "reference_ratio",
    "run_limit_equation",
    "run_tau",
    "sample_generalized",
    "steady_excitatory",
    "steady_inhibitory",
    "steady_numeric",
    "steady_state",
    "step_tau",
    "tilde_n_from_M",
    "tilde_n_from_slope",
    "total_mass",
    "verify_jump",
]
