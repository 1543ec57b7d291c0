"""Retraction-free landing methods for smooth equality-constrained
optimization: generic dense metric machinery, closed-form steps for
orthogonality constraints, a globally convergent line-search solver, and
oracles that verify the underlying equivalence theorems numerically.
"""

from .exceptions import (MetricNotPDError, NotPositiveDefiniteError,
                         PropertyViolatedError, RankDeficientError,
                         SingularHessianError, ValidationFailedError)
from .linalg import SvdFactors, solve_spd, svd, sylvester_sym
from .metrics import (GRAM_EUCLID, GRAM_G, IDENTITY, ConstructedMetric,
                      EuclideanMetric, NormalOperatorChoice, dc_matrix,
                      euclid_pseudoinverse_apply, gram_operator,
                      landing_direction, metric_inner, metric_inverse_apply,
                      metric_norm, normal_step_gradient,
                      normal_step_pseudoinverse, projector_apply,
                      projector_perp_apply, stiefel_beta_metric,
                      stiefel_canonical_metric, tangent_step)
from .oracles import (RateFit, equivalence_suite, estimate_order, fd_gradient,
                      min_norm_qp_oracle)
from .problems import (ProblemInstance, ValidationReport, make_random_problem,
                       make_sphere_problem, make_stiefel_problem, sym_to_vec,
                       validate_problem, vec_to_sym)
from .solvers import (CONVERGED, DIVERGED, LINE_SEARCH_STALLED,
                      MAX_ITERATIONS, RANK_DEFICIENT, IterationTrace,
                      LandingConfig, SolveResult,
                      augmented_lagrangian_gradient, landing_fixed_step_solve,
                      landing_linesearch_solve, least_squares_multiplier,
                      merit, merit_directional_derivative,
                      newton_landing_solve, newton_landing_step,
                      penalty_upper_bound_estimate, sqp_direction,
                      sqp_reference_solve, update_penalty)
from . import stiefel

__version__ = "0.1.0"
