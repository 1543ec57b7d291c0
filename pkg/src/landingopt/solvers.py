"""Iterative solvers: the line-search landing method with an l2 merit
function, a fixed-step baseline, a Newton-type landing step, and dense
SQP / augmented-Lagrangian reference directions used by the equivalence
tests.
"""

import logging

import numpy as np
import scipy.linalg

from . import metrics
from .exceptions import (NotPositiveDefiniteError, RankDeficientError,
                         SingularHessianError)
from .linalg import solve_spd
from .metrics import (constraint_bases, dc_matrix,
                      euclid_pseudoinverse_apply, gram_operator,
                      metric_inverse_apply, metric_norm,
                      normal_operator_min_eig, normal_step_gradient,
                      normal_step_pseudoinverse, tangent_step)

logger = logging.getLogger(__name__)

CONVERGED = "Converged"
MAX_ITERATIONS = "MaxIterations"
LINE_SEARCH_STALLED = "LineSearchStalled"
RANK_DEFICIENT = "RankDeficient"
DIVERGED = "Diverged"

# tolerance slack on the sufficient-decrease certificate check
_CERT_SLACK = 1e-9


def _feas_floor(x):
    """Below this, a constraint value is treated as exactly zero."""
    return 1e-14 * max(1.0, float(np.linalg.norm(x)))


class LandingConfig:
    """Line-search and stopping parameters for the landing solver.

    eta in (0, 1/2) and beta_bt in (0, 1) are the Armijo constant and
    backtracking factor; rho > 0 enters the penalty update and must stay
    below lambda_min(H)/2 (validated against a sampled eigenvalue at the
    starting point); mu0 is the initial merit penalty.
    """

    def __init__(self, eta=1e-4, beta_bt=0.5, rho=0.1, mu0=1.0,
                 grad_tol=1e-6, feas_tol=1e-8, max_iter=2000,
                 max_backtracks=60):
        if not 0.0 < eta < 0.5:
            raise ValueError("eta must lie in (0, 1/2)")
        if not 0.0 < beta_bt < 1.0:
            raise ValueError("beta_bt must lie in (0, 1)")
        if rho <= 0.0:
            raise ValueError("rho must be positive")
        if mu0 <= 0.0:
            raise ValueError("mu0 must be positive")
        if grad_tol <= 0.0 or feas_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if max_iter < 1 or max_backtracks < 1:
            raise ValueError("iteration caps must be at least 1")
        self.eta = float(eta)
        self.beta_bt = float(beta_bt)
        self.rho = float(rho)
        self.mu0 = float(mu0)
        self.grad_tol = float(grad_tol)
        self.feas_tol = float(feas_tol)
        self.max_iter = int(max_iter)
        self.max_backtracks = int(max_backtracks)


class IterationTrace:
    """Per-iteration record of the solver state."""

    FIELDS = ("k", "f", "feas", "grad_norm_g", "mu", "alpha", "merit", "backtracks")

    def __init__(self, k, f, feas, grad_norm_g, mu, alpha, merit, backtracks):
        self.k = k
        self.f = f
        self.feas = feas
        self.grad_norm_g = grad_norm_g
        self.mu = mu
        self.alpha = alpha
        self.merit = merit
        self.backtracks = backtracks

    def astuple(self):
        return (self.k, self.f, self.feas, self.grad_norm_g,
                self.mu, self.alpha, self.merit, self.backtracks)


class StepDiagnostics:
    """Inequalities certified at one accepted iteration, kept for audits."""

    def __init__(self, k, dphi, decrease_bound, armijo_lhs, armijo_rhs):
        self.k = k
        self.dphi = dphi                      # D phi_mu(x)[d]
        self.decrease_bound = decrease_bound  # -|grad|_g^2 - rho mu |c|
        self.armijo_lhs = armijo_lhs          # phi_mu(x + alpha d)
        self.armijo_rhs = armijo_rhs          # phi_mu(x) + eta alpha dphi


class SolveResult:
    def __init__(self, status, final_x, trace, mu_final, diagnostics=None):
        self.status = status
        self.final_x = final_x
        self.trace = trace
        self.mu_final = mu_final
        self.diagnostics = diagnostics if diagnostics is not None else []

    def __repr__(self):
        return (f"SolveResult(status={self.status!r}, iterations={len(self.trace)}, "
                f"mu_final={self.mu_final})")


def merit(prob, mu, x):
    """l2 merit function phi_mu(x) = f(x) + mu * |c(x)|."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return prob.f(x) + mu * float(np.linalg.norm(prob.c(x)))


def merit_directional_derivative(prob, mu, x, d):
    """One-sided directional derivative of phi_mu at x along d.

    Smooth branch when c(x) != 0; at feasible points the merit function
    is nonsmooth and the derivative picks up mu * |Dc(x) d|.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    cx = prob.c(x)
    cnorm = float(np.linalg.norm(cx))
    df_d = float(prob.grad_f(x) @ d)
    dc_d = prob.dc(x, d)
    if cnorm <= _feas_floor(x):
        return df_d + mu * float(np.linalg.norm(dc_d))
    return df_d + mu * float(cx @ dc_d) / cnorm


def update_penalty(mu_prev, prob, x, d_n, rho):
    """Penalty update of the landing line search:
    mu_k = max(mu_{k-1}, Df(x)[d_N] / (rho |c(x)|)) at infeasible points."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    cnorm = float(np.linalg.norm(prob.c(x)))
    if cnorm <= _feas_floor(x):
        return mu_prev
    ratio = float(prob.grad_f(x) @ d_n) / (rho * cnorm)
    return max(mu_prev, ratio)


def landing_linesearch_solve(prob, metric, h, config, x0,
                             normal_form="pseudoinverse"):
    """Adaptive-step landing method (backtracking Armijo on the l2 merit).

    Each accepted step satisfies phi_mu(x + alpha d) <= phi_mu(x) +
    eta alpha Dphi_mu(x)[d] with the updated penalty mu, and the
    sufficient-decrease certificate Dphi_mu(x)[d] <= -|grad|_g^2 -
    rho mu |c| is asserted before every search.  The normal step is the
    pseudoinverse form by default; normal_form="gradient" uses the
    unconstrained gradient of the infeasibility (which requires
    h = gram_g, the choice it is equivalent to).
    """
    if normal_form not in ("pseudoinverse", "gradient"):
        raise ValueError("normal_form must be 'pseudoinverse' or 'gradient'")
    if normal_form == "gradient" and metrics._normal_kind(h) != "gram_g":
        raise ValueError("the gradient normal form corresponds to h=gram_g")
    x = np.asarray(x0, dtype=float).copy()
    mu = config.mu0
    trace = []
    diagnostics = []

    def final_row(k, grad_norm, bt=0):
        feas = float(np.linalg.norm(prob.c(x)))
        trace.append(IterationTrace(k, prob.f(x), feas, grad_norm, mu, 0.0,
                                    merit(prob, mu, x), bt))

    lam_min_h = None
    status = MAX_ITERATIONS
    k = 0
    while k < config.max_iter:
        try:
            jac = dc_matrix(prob, x)
            if lam_min_h is None or k % 50 == 0:
                lam_min_h = normal_operator_min_eig(prob, metric, x, h, jac=jac)
                if config.rho >= 0.5 * lam_min_h:
                    raise ValueError(
                        f"rho={config.rho} violates rho < lambda_min(H)/2 = "
                        f"{0.5 * lam_min_h:.3e} sampled at iteration {k}")
            d_t = tangent_step(prob, metric, x, jac=jac)
        except RankDeficientError:
            status = RANK_DEFICIENT
            break
        grad_norm = metric_norm(prob, metric, x, d_t, jac=jac)
        feas = float(np.linalg.norm(prob.c(x)))
        if grad_norm <= config.grad_tol and feas <= config.feas_tol:
            status = CONVERGED
            final_row(k, grad_norm)
            return SolveResult(status, x, trace, mu, diagnostics)
        try:
            if normal_form == "gradient":
                d_n = normal_step_gradient(prob, metric, x, jac=jac)
            else:
                d_n = normal_step_pseudoinverse(prob, metric, x, h, jac=jac)
        except RankDeficientError:
            status = RANK_DEFICIENT
            break
        mu = update_penalty(mu, prob, x, d_n, config.rho)
        d = d_t + d_n
        dphi = merit_directional_derivative(prob, mu, x, d)
        bound = -grad_norm**2 - config.rho * mu * feas
        assert dphi <= bound + _CERT_SLACK, (
            f"sufficient-decrease certificate failed at k={k}: "
            f"dphi={dphi:.6e} > bound={bound:.6e}")
        logger.debug("k=%d dphi=%.6e bound=%.6e mu=%.6e", k, dphi, bound, mu)

        phi0 = merit(prob, mu, x)
        alpha = 1.0
        backtracks = 0
        while True:
            phi_trial = merit(prob, mu, x + alpha * d)
            if np.isfinite(phi_trial) and phi_trial <= phi0 + config.eta * alpha * dphi:
                break
            backtracks += 1
            if backtracks > config.max_backtracks:
                status = LINE_SEARCH_STALLED
                final_row(k, grad_norm, bt=backtracks)
                return SolveResult(status, x, trace, mu, diagnostics)
            alpha *= config.beta_bt
        trace.append(IterationTrace(k, prob.f(x), feas, grad_norm, mu, alpha,
                                    phi0, backtracks))
        diagnostics.append(StepDiagnostics(
            k, dphi, bound, phi_trial, phi0 + config.eta * alpha * dphi))
        x = x + alpha * d
        k += 1

    if status == MAX_ITERATIONS:
        try:
            jac = dc_matrix(prob, x)
            d_t = tangent_step(prob, metric, x, jac=jac)
            grad_norm = metric_norm(prob, metric, x, d_t, jac=jac)
        except RankDeficientError:
            grad_norm = float("nan")
        final_row(k, grad_norm)
    else:
        # rank-deficient exit: log what is still computable
        trace.append(IterationTrace(k, prob.f(x), float(np.linalg.norm(prob.c(x))),
                                    float("nan"), mu, 0.0, merit(prob, mu, x), 0))
    return SolveResult(status, x, trace, mu, diagnostics)


def landing_fixed_step_solve(prob, metric, h, alpha, max_iter, x0,
                             region_bound=10.0, grad_tol=1e-6, feas_tol=1e-8):
    """Constant-step landing baseline x_{k+1} = x_k + alpha d(x_k).

    No merit-function guarantee; stops Converged at the usual tolerance
    pair, Diverged when |c| exceeds region_bound.  Trace rows carry
    mu = 0 and merit = f since no penalty is in play.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = np.asarray(x0, dtype=float).copy()
    trace = []
    status = MAX_ITERATIONS
    for k in range(max_iter):
        feas = float(np.linalg.norm(prob.c(x)))
        if feas > region_bound:
            status = DIVERGED
            trace.append(IterationTrace(k, prob.f(x), feas, float("nan"),
                                        0.0, 0.0, prob.f(x), 0))
            return SolveResult(status, x, trace, 0.0)
        try:
            jac = dc_matrix(prob, x)
            d_t = tangent_step(prob, metric, x, jac=jac)
            grad_norm = metric_norm(prob, metric, x, d_t, jac=jac)
            if grad_norm <= grad_tol and feas <= feas_tol:
                trace.append(IterationTrace(k, prob.f(x), feas, grad_norm,
                                            0.0, 0.0, prob.f(x), 0))
                return SolveResult(CONVERGED, x, trace, 0.0)
            d_n = normal_step_pseudoinverse(prob, metric, x, h, jac=jac)
        except RankDeficientError:
            status = RANK_DEFICIENT
            trace.append(IterationTrace(k, prob.f(x), feas, float("nan"),
                                        0.0, 0.0, prob.f(x), 0))
            return SolveResult(status, x, trace, 0.0)
        trace.append(IterationTrace(k, prob.f(x), feas, grad_norm, 0.0,
                                    alpha, prob.f(x), 0))
        x = x + alpha * (d_t + d_n)
    return SolveResult(status, x, trace, 0.0)


def sqp_direction(prob, x, b_mat):
    """Basic SQP direction: minimize the B-quadratic model subject to the
    linearized constraint, solved through the dense symmetric KKT system.

    Returns (d, lam) with B d + grad_f - Dc* lam = 0 and Dc d + c = 0.
    """
    x = np.asarray(x, dtype=float)
    b_mat = np.asarray(b_mat, dtype=float)
    n = prob.dim_e
    m = prob.dim_f
    try:
        scipy.linalg.cho_factor(b_mat, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"B is not positive definite: {exc}") from exc
    jac = dc_matrix(prob, x)
    metrics._guard_full_row_rank(jac)
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = 0.5 * (b_mat + b_mat.T)
    kkt[:n, n:] = jac.T
    kkt[n:, :n] = jac
    rhs = np.concatenate([-prob.grad_f(x), -prob.c(x)])
    sol = scipy.linalg.solve(kkt, rhs, assume_a="sym", check_finite=False)
    d = sol[:n]
    lam = -sol[n:]
    return d, lam


def least_squares_multiplier(prob, x, jac=None):
    """lambda*(x) = (Dc Dc*)^{-1} Dc grad_f(x), the Euclidean least-squares
    multiplier."""
    if jac is None:
        jac = dc_matrix(prob, x)
    metrics._guard_full_row_rank(jac)
    return solve_spd(jac @ jac.T, jac @ prob.grad_f(x))


def newton_landing_step(prob, x, normal_space="lagrangian"):
    """One step of the Newton-type landing scheme.

    The tangent part solves the reduced Lagrangian-Hessian system on an
    explicit tangent basis; the normal part is the pseudoinverse
    feasibility step projected onto the chosen normal space:
    "lagrangian" uses the E-orthogonal complement of (hess_L . tangent
    space), the choice that makes the scheme quadratically convergent;
    "euclidean" uses range(Dc*) instead, which degrades the rate.
    """
    if normal_space not in ("lagrangian", "euclidean"):
        raise ValueError("normal_space must be 'lagrangian' or 'euclidean'")
    x = np.asarray(x, dtype=float)
    jac = dc_matrix(prob, x)
    grad = prob.grad_f(x)
    lam = least_squares_multiplier(prob, x, jac=jac)
    tangent, _ = constraint_bases(jac)
    hess_cols = np.column_stack(
        [prob.hess_lagrangian(x, lam, tangent[:, i]) for i in range(tangent.shape[1])]
    )
    red = tangent.T @ hess_cols
    red = 0.5 * (red + red.T)
    sred = np.linalg.svd(red, compute_uv=False)
    if sred[-1] <= 1e-12 * max(1.0, sred[0]):
        raise SingularHessianError("reduced Lagrangian Hessian is singular")
    d_t = -tangent @ np.linalg.solve(red, tangent.T @ grad)
    v = euclid_pseudoinverse_apply(prob, x, prob.c(x), jac=jac)
    if normal_space == "euclidean":
        d_n = -v
    else:
        su = np.linalg.svd(hess_cols, compute_uv=False)
        if su[-1] <= 1e-12 * max(1.0, su[0]):
            raise SingularHessianError("hess_L maps the tangent space degenerately")
        u_full, _, _ = np.linalg.svd(hess_cols, full_matrices=True)
        normal = u_full[:, tangent.shape[1]:]
        coeffs = np.linalg.solve(np.hstack([tangent, normal]), v)
        d_n = -normal @ coeffs[tangent.shape[1]:]
    return d_t + d_n


def newton_landing_solve(prob, x0, max_iter=50, grad_tol=1e-6, feas_tol=1e-8,
                         normal_space="lagrangian"):
    """Drive newton_landing_step with unit steps until tolerance."""
    x = np.asarray(x0, dtype=float).copy()
    trace = []
    status = MAX_ITERATIONS
    for k in range(max_iter + 1):
        try:
            jac = dc_matrix(prob, x)
            grad_proj = tangent_step(prob, metrics.EuclideanMetric(), x, jac=jac)
        except RankDeficientError:
            status = RANK_DEFICIENT
            break
        feas = float(np.linalg.norm(prob.c(x)))
        grad_norm = float(np.linalg.norm(grad_proj))
        trace.append(IterationTrace(k, prob.f(x), feas, grad_norm, 0.0,
                                    1.0 if k < max_iter else 0.0,
                                    prob.f(x), 0))
        if grad_norm <= grad_tol and feas <= feas_tol:
            status = CONVERGED
            break
        if k == max_iter:
            break
        x = x + newton_landing_step(prob, x, normal_space=normal_space)
    return SolveResult(status, x, trace, 0.0)


def sqp_reference_solve(prob, x0, max_iter=200, grad_tol=1e-6, feas_tol=1e-8):
    """Reference SQP stepper with B = identity and unit steps; an oracle
    companion, not a production path."""
    x = np.asarray(x0, dtype=float).copy()
    eye = np.eye(prob.dim_e)
    trace = []
    status = MAX_ITERATIONS
    for k in range(max_iter + 1):
        try:
            jac = dc_matrix(prob, x)
            grad_proj = tangent_step(prob, metrics.EuclideanMetric(), x, jac=jac)
        except RankDeficientError:
            status = RANK_DEFICIENT
            break
        feas = float(np.linalg.norm(prob.c(x)))
        grad_norm = float(np.linalg.norm(grad_proj))
        trace.append(IterationTrace(k, prob.f(x), feas, grad_norm, 0.0,
                                    1.0 if k < max_iter else 0.0,
                                    prob.f(x), 0))
        if grad_norm <= grad_tol and feas <= feas_tol:
            status = CONVERGED
            break
        if k == max_iter:
            break
        d, _lam = sqp_direction(prob, x, eye)
        x = x + d
    return SolveResult(status, x, trace, 0.0)


def augmented_lagrangian_gradient(prob, metric, x, beta_pen):
    """Riemannian gradient (in x) of the augmented Lagrangian with the
    least-squares multiplier:

        L_beta(x, lam) = f(x) - <lam, c(x)> + beta/2 |c(x)|^2,
        lam = (Dc Dc*^g)^{-1} Dc grad_g f(x).

    Equals minus the landing direction with H = beta * Dc Dc*^g.
    """
    if beta_pen <= 0:
        raise ValueError("beta_pen must be positive")
    x = np.asarray(x, dtype=float)
    jac = dc_matrix(prob, x)
    metrics._guard_full_row_rank(jac)
    grad_g = metric_inverse_apply(prob, metric, x, prob.grad_f(x), jac=jac)
    gram = gram_operator(prob, metric, x, jac=jac)
    lam = solve_spd(gram, jac @ grad_g)
    w = prob.grad_f(x) - jac.T @ lam + beta_pen * (jac.T @ prob.c(x))
    return metric_inverse_apply(prob, metric, x, w, jac=jac)


def penalty_upper_bound_estimate(prob, metric, h, sample_points, rho, mu0=1.0):
    """Empirical version of the penalty upper bound: the max over samples
    of Df(x)[d_N(x)] / (rho |c(x)|), floored at mu0.  Samples that are
    feasible to round-off contribute no ratio."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    bound = mu0
    for x in sample_points:
        x = np.asarray(x, dtype=float)
        cnorm = float(np.linalg.norm(prob.c(x)))
        if cnorm <= _feas_floor(x):
            continue
        d_n = normal_step_pseudoinverse(prob, metric, x, h)
        ratio = float(prob.grad_f(x) @ d_n) / (rho * cnorm)
        bound = max(bound, ratio)
    return bound
