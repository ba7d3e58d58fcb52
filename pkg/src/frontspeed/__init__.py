"""Minimal speeds and profiles of traveling waves for monostable
reaction-diffusion-advection equations with piecewise-continuous coefficients."""

__version__ = "0.1.0"

from ._backend import BACKEND, available as available_backends
from .bvp_solver import (ADMISSIBLE, INADMISSIBLE, INDETERMINATE, AdmissibilityResult,
                         SolveOptions, YSolution, lower_bound_delta, necessary_integral,
                         picard_refine, rhs, slope_roots, solve_bvp)
from .coefficients import (AverageStats, Model, PiecewiseFn, average_stats, fisher_like,
                           integral_average, load_model, parse_model, validate)
from .errors import (ConfigError, DomainError, DualCaseError, ExprSyntaxError, FrontSpeedError,
                     HypothesisError, NumericalError, QuadratureError, RefusedError,
                     RegularizationError)
from .profile import WaveProfile, reconstruct, residual_integral_form
from .regularization import (RegularizationReport, eps_regularize, gamma_limit_check,
                             model_sweep, regularize_model, truncate_boundary)
from .wave_speed import Certificate, SpeedBounds, bounds_c_star, certify, find_c_star
