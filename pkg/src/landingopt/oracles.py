"""Independent oracles: finite-difference gradients, a KKT-based
minimum-norm solver, convergence-order estimation, and the randomized
equivalence suite that checks the metric-equivalence theorems
numerically on desk-scale instances.
"""

import numpy as np
import scipy.linalg

from . import metrics, solvers
from .exceptions import PropertyViolatedError, RankDeficientError
from .linalg import solve_spd
from .problems import ProblemInstance, fd_step, make_random_problem

ORDER_FLOOR = 1e-13


def fd_gradient(func, x, h=None):
    """Central-difference gradient of a scalar function, coordinate-wise."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = fd_step(x)
    if h <= 0:
        raise ValueError("h must be positive")
    out = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (func(x + e) - func(x - e)) / (2.0 * h)
    return out


def min_norm_qp_oracle(dc_mat, g_mat, rhs):
    """Minimum G-norm solution of Dc d = rhs via the dense KKT system.

    Solves min (1/2) d^T G d subject to Dc d = rhs; used to validate the
    pseudoinverse normal step independently of the projector formulas.
    """
    dc_mat = np.asarray(dc_mat, dtype=float)
    g_mat = np.asarray(g_mat, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    m, n = dc_mat.shape
    s = np.linalg.svd(dc_mat, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise RankDeficientError("Dc does not have full row rank")
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = 0.5 * (g_mat + g_mat.T)
    kkt[:n, n:] = dc_mat.T
    kkt[n:, :n] = dc_mat
    full_rhs = np.concatenate([np.zeros(n), rhs])
    sol = scipy.linalg.solve(kkt, full_rhs, assume_a="sym", check_finite=False)
    return sol[:n]


class RateFit:
    """Least-squares fit of log e_{k+1} against log e_k."""

    def __init__(self, samples, fitted_order, fit_residual):
        self.samples = samples          # retained (k, error) pairs
        self.fitted_order = fitted_order
        self.fit_residual = fit_residual

    def __repr__(self):
        return (f"RateFit(order={self.fitted_order:.3f}, "
                f"residual={self.fit_residual:.2e}, n={len(self.samples)})")


def estimate_order(errors):
    """Estimate the convergence order of a decreasing error sequence.

    Samples at or below 1e-13 are discarded (round-off floor).  At least
    three retained samples are needed for a fit; four or more give a
    meaningful residual.
    """
    retained = [(k, float(e)) for k, e in enumerate(errors) if e > ORDER_FLOOR]
    for _, e in retained:
        if e <= 0:
            raise ValueError("errors must be positive")
    if len(retained) < 3:
        raise ValueError(
            f"need at least 3 samples above {ORDER_FLOOR:g}, got {len(retained)}")
    es = np.array([e for _, e in retained])
    xs = np.log(es[:-1])
    ys = np.log(es[1:])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return RateFit(retained, float(slope), float(np.sqrt(np.mean(resid**2))))


# ---------------------------------------------------------------------------
# equivalence suite

PROFILE_BOUNDS = {"small": (12, 4), "medium": (20, 8)}


def _random_spd(rng, n, jitter=0.5):
    a = rng.standard_normal((n, n))
    return a @ a.T + jitter * np.eye(n)


def _oblique_metric(prob, w_mat, g_t_mat, h_mat):
    """Constructed metric with normal space W . range(Dc*), tangent
    restriction a constant SPD matrix, and G_N = Dc* H^{-1} Dc built from
    the problem's own dc / dc_adjoint callables."""

    def bases_at(x):
        jac = metrics.dc_matrix(prob, x)
        tangent, row = metrics.constraint_bases(jac)
        pushed = w_mat @ row
        q, _ = np.linalg.qr(pushed)
        return tangent, q

    def projector(prob_, x, v):
        tangent, normal = bases_at(x)
        coeffs = np.linalg.solve(np.hstack([tangent, normal]), v)
        return tangent @ coeffs[:tangent.shape[1]]

    def g_tangent(prob_, x, v):
        return g_t_mat @ v

    def g_normal(prob_, x, v):
        return prob_.dc_adjoint(x, solve_spd(h_mat, prob_.dc(x, v)))

    return metrics.ConstructedMetric(projector, g_tangent, g_normal,
                                     label="oblique-suite")


def _with_scaled_adjoint(prob, factor):
    """Copy of a problem whose dc_adjoint is off by a factor (fault hook)."""
    return ProblemInstance(
        dim_e=prob.dim_e, dim_f=prob.dim_f, f=prob.f, grad_f=prob.grad_f,
        c=prob.c, dc=prob.dc,
        dc_adjoint=lambda x, y: factor * prob.dc_adjoint(x, y),
        name=prob.name + "+fault")


def _rel_dev(a, b):
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


class EquivalenceReport:
    def __init__(self, deviations, n_instances, tol):
        self.deviations = deviations    # property name -> max deviation
        self.n_instances = n_instances
        self.tol = tol

    @property
    def passed(self):
        return all(v <= self.tol for v in self.deviations.values())

    def table(self):
        lines = [f"{'property':<34}{'max deviation':>16}"]
        for name, dev in self.deviations.items():
            lines.append(f"{name:<34}{dev:>16.3e}")
        return "\n".join(lines)


def equivalence_suite(seed=0, size_profile="small", n_instances=50, tol=1e-8,
                      fault=None):
    """Randomized checks of the equivalence theorems.

    Properties checked per instance:
      pseudoinverse_vs_gradient  -- redefining G_N = Dc* H^{-1} Dc turns the
                                    pseudoinverse step into -grad_g psi
      normal_metric_independence -- the pseudoinverse step ignores G_N
      sqp_equals_landing         -- the SQP direction equals tangent step +
                                    pseudoinverse normal step in the metric
                                    induced by B with H = Id
      alm_equals_landing         -- the augmented-Lagrangian gradient with
                                    least-squares multipliers is minus the
                                    landing direction with H = beta Dc Dc*^g

    Raises PropertyViolatedError (naming the property and instance seed)
    when any deviation exceeds tol.  fault="wrong_adjoint" corrupts the
    problem adjoint to demonstrate suite sensitivity.
    """
    if size_profile not in PROFILE_BOUNDS:
        raise ValueError(f"unknown size profile {size_profile!r}")
    n_max, m_max = PROFILE_BOUNDS[size_profile]
    rng = np.random.Generator(np.random.PCG64(seed))
    names = ("pseudoinverse_vs_gradient", "normal_metric_independence",
             "sqp_equals_landing", "alm_equals_landing")
    worst = {name: 0.0 for name in names}
    worst_seed = {name: None for name in names}

    for idx in range(n_instances):
        inst_seed = int(rng.integers(0, 2**63 - 1))
        inst_rng = np.random.Generator(np.random.PCG64(inst_seed))
        n = int(inst_rng.integers(4, n_max + 1))
        m = int(inst_rng.integers(1, min(m_max, n - 1) + 1))
        prob = make_random_problem(n, m, inst_seed)
        if fault == "wrong_adjoint":
            prob = _with_scaled_adjoint(prob, 2.0)
        x = inst_rng.standard_normal(n) * 0.7
        jac = metrics.dc_matrix(prob, x)
        cx = prob.c(x)

        # Prop: pseudoinverse step as a Riemannian gradient of psi
        h_mat = _random_spd(inst_rng, m)
        w_mat = np.eye(n) + 0.3 * inst_rng.standard_normal((n, n))
        g_t_mat = _random_spd(inst_rng, n)
        metric = _oblique_metric(prob, w_mat, g_t_mat, h_mat)
        d_grad = metrics.normal_step_gradient(prob, metric, x, jac=jac)
        v = metrics.euclid_pseudoinverse_apply(prob, x, h_mat @ cx, jac=jac)
        d_pinv = -metrics.projector_perp_apply(prob, metric, x, v, jac=jac)
        dev = _rel_dev(d_grad, d_pinv)
        if dev > worst["pseudoinverse_vs_gradient"]:
            worst["pseudoinverse_vs_gradient"] = dev
            worst_seed["pseudoinverse_vs_gradient"] = inst_seed

        # Prop: the pseudoinverse step depends on G_N only through the
        # projector.  Compute it through the full definition
        # -Dc*^g (Dc Dc*^g)^{-1} H c for two different normal metrics.
        def pinv_step_by_definition(metric_):
            gram = metrics.gram_operator(prob, metric_, x, jac=jac)
            y = solve_spd(gram, h_mat @ cx)
            return -metrics.metric_inverse_apply(prob, metric_, x, jac.T @ y,
                                                 jac=jac)

        metric_b = metrics.ConstructedMetric(
            metric.projector, metric.g_tangent,
            lambda prob_, x_, v_, s=_random_spd(inst_rng, n): s @ v_,
            label="oblique-suite-gn2")
        dev = _rel_dev(pinv_step_by_definition(metric),
                       pinv_step_by_definition(metric_b))
        dev = max(dev, _rel_dev(pinv_step_by_definition(metric), d_pinv))
        if dev > worst["normal_metric_independence"]:
            worst["normal_metric_independence"] = dev
            worst_seed["normal_metric_independence"] = inst_seed

        # Prop: SQP direction = landing direction in the B-induced metric
        b_mat = _random_spd(inst_rng, n)
        d_sqp, _ = solvers.sqp_direction(prob, x, b_mat)
        tangent, _row = metrics.constraint_bases(jac)
        w_cols = b_mat @ tangent
        u_full, _, _ = np.linalg.svd(w_cols, full_matrices=True)
        normal = u_full[:, tangent.shape[1]:]

        def sqp_projector(prob_, x_, v_, tangent=tangent, normal=normal):
            coeffs = np.linalg.solve(np.hstack([tangent, normal]), v_)
            return tangent @ coeffs[:tangent.shape[1]]

        sqp_metric = metrics.ConstructedMetric(
            sqp_projector,
            lambda prob_, x_, v_: b_mat @ v_,
            lambda prob_, x_, v_: v_,
            label="sqp-induced")
        d_t = metrics.tangent_step(prob, sqp_metric, x, jac=jac)
        d_n = metrics.normal_step_pseudoinverse(prob, sqp_metric, x,
                                                metrics.IDENTITY, jac=jac)
        dev = _rel_dev(d_t + d_n, d_sqp)
        if dev > worst["sqp_equals_landing"]:
            worst["sqp_equals_landing"] = dev
            worst_seed["sqp_equals_landing"] = inst_seed

        # Prop: ALM iteration with least-squares multipliers
        beta_pen = float(inst_rng.uniform(0.5, 3.0))
        alm_grad = solvers.augmented_lagrangian_gradient(prob, metric, x,
                                                         beta_pen)
        d_t2 = metrics.tangent_step(prob, metric, x, jac=jac)
        d_n2 = beta_pen * metrics.normal_step_gradient(prob, metric, x, jac=jac)
        dev = _rel_dev(alm_grad, -(d_t2 + d_n2))
        if dev > worst["alm_equals_landing"]:
            worst["alm_equals_landing"] = dev
            worst_seed["alm_equals_landing"] = inst_seed

    report = EquivalenceReport(worst, n_instances, tol)
    if not report.passed:
        failing = [f"{name} (deviation {dev:.3e}, instance seed {worst_seed[name]})"
                   for name, dev in worst.items() if dev > tol]
        raise PropertyViolatedError("equivalence properties violated: "
                                    + "; ".join(failing))
    return report
