"""Numerical laboratory for the Gaussian log-Sobolev deficit.

Relative densities ``f = d mu / d gamma`` backed by Gaussian mixtures (any
dimension up to 8) or tabulated 1-D densities; exact Ornstein-Uhlenbeck
evolution of mixtures; entropy, Fisher information and the deficit by two
independent routes; Stein kernels and Stein functionals; W2 distances; and a
catalog of inequalities checked with explicit error budgets.
"""

__version__ = "0.1.0"

from .density import (GaussianMixture, RelativeDensity, Tabulated1D, from_spec, gaussian,
                      make_extremal, mixture, recenter, spec_hash, standard_gaussian)
from .errors import (DegenerateConditioningError, InequalityViolationError, LSDeficitError,
                     PreconditionError, SpecError, ToleranceExceededError,
                     UnsupportedFamilyError)
from .functionals import (FunctionalReport, deficit, deficit_time_integral, deficit_via_mmse,
                          entropy, fisher)
from .numerics import DEFAULT_CONFIG, Estimate, QuadratureConfig, TimeQuadrature
from .bounds import SlackReport, verify, verify_all
from .stein import (SteinFunctionalEstimate, d_lower_bound, dtilde_lower_bound, resolvent,
                    stein_discrepancy, stein_kernel_1d)
from .transport import W2Result, w2, w2_1d, w2_flow, w2_gaussian

__all__ = [
    "DEFAULT_CONFIG", "DegenerateConditioningError", "Estimate", "FunctionalReport",
    "GaussianMixture", "InequalityViolationError", "LSDeficitError", "PreconditionError",
    "QuadratureConfig", "RelativeDensity", "SlackReport", "SpecError",
    "SteinFunctionalEstimate", "Tabulated1D", "TimeQuadrature", "ToleranceExceededError",
    "UnsupportedFamilyError", "W2Result", "d_lower_bound", "deficit", "deficit_time_integral",
    "deficit_via_mmse", "dtilde_lower_bound", "entropy", "fisher", "from_spec", "gaussian",
    "make_extremal", "mixture", "recenter", "resolvent", "spec_hash", "standard_gaussian",
    "stein_discrepancy", "stein_kernel_1d", "verify", "verify_all", "w2", "w2_1d", "w2_flow",
    "w2_gaussian",
]
