"""Similarity solutions of a two-phase spherical Stefan problem for an
electrical contact heated by an arc and by Joule heating.

The melt-front coefficient is found from the Stefan condition after solving
the liquid and solid phases as fixed points of integral operators; the
contraction and existence windows follow from closed-form estimates on the
temperature-dependent coefficients.
"""

from .coefficients import (CoefficientBounds, CoefficientFamily, CoefficientSet,
                           check_hypotheses, estimate_bounds)
from .config import RunConfig, load_config, parse_config
from .errors import (ConfigError, ConvergenceError, DomainError, HypothesisError,
                     ModelDomainError, NoRootError, OracleError, QuadratureError, RangeError,
                     StefanError, WindowError)
from .fixed_point import (PicardResult, PicardSettings, apply_V, apply_W, check_condepsilon2,
                          epsilon1, epsilon2, picard, xi_bar1, xi_bar2)
from .interface import Z, Z_bounds, check_existence_window, solve_xi
from .kernels import SimilarityProfile, kernel_chi, kernel_E, kernel_phi, kernel_Q
from .reconstruct import (PhysicalSolution, bc_residuals, ode_residual, shooting_oracle,
                          temperature)
from .special import G, QuadratureSpec, erf, erfc, erfcx, h_function, integrate
from .vapor import PhysicalParams, VaporFront, P_star, alpha0, check_ignition

__version__ = "0.1.0"
