"""Continuous-time Euler-Maruyama experiments for SDEs with rough drifts.

The compiled kernel extension is used when available; ``rough_em.BACKEND``
reports which one was selected at import.
"""

from ._backend import BACKEND
from .brownian import BrownianPathGrid, sample_increments, sample_path
from .cutoff import CutoffSpec, cutoff_model, eval_psi
from .integrator import (DivergenceError, MomentReport, Trajectory, integrate, integrate_degenerate,
                         one_step_moment_check)
from .kolmogorov import (bismut_gradient, bismut_hessian, check_lemma21, constants, flow_moments,
                         gradient_bound_check, semigroup_apply, solve_u_lambda)
from .models import (CATALOG_NAMES, DegenerateSdeModel, SdeModel, make_catalog_model,
                     validate_model)
from .modulus import (LogPower, Linear, Modulus, ModulusClass, Power, check_class,
                      holder_dini_lift, parse_modulus, phi_tilde)
from .rates import (RateReport, RateStudy, bound_curve_thm11, bound_curve_thm13, envelope_check,
                    fit_rate, strong_error)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BrownianPathGrid", "CATALOG_NAMES", "CutoffSpec", "DegenerateSdeModel",
    "DivergenceError", "Linear", "LogPower", "Modulus", "ModulusClass", "MomentReport", "Power",
    "RateReport", "RateStudy", "SdeModel", "Trajectory", "bismut_gradient", "bismut_hessian",
    "bound_curve_thm11", "bound_curve_thm13", "check_class", "check_lemma21", "constants",
    "cutoff_model", "envelope_check", "eval_psi", "fit_rate", "flow_moments",
    "gradient_bound_check", "holder_dini_lift", "integrate", "integrate_degenerate",
    "make_catalog_model", "one_step_moment_check", "parse_modulus", "phi_tilde",
    "sample_increments", "sample_path", "semigroup_apply", "solve_u_lambda", "strong_error",
    "validate_model",
]
