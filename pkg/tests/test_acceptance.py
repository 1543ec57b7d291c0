"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line.  Every tolerance is pinned here; nothing is deferred to later
calibration.
"""

import contextlib
import time

import numpy as np
import pytest

from landingopt import cli, solvers, stiefel
from landingopt.metrics import (EuclideanMetric, GRAM_EUCLID, IDENTITY,
                                normal_step_gradient,
                                normal_step_pseudoinverse,
                                stiefel_beta_metric, stiefel_canonical_metric,
                                tangent_step)
from landingopt.linalg import sylvester_sym
from landingopt.oracles import equivalence_suite, estimate_order, fd_gradient
from landingopt.problems import (ProblemInstance, make_sphere_problem,
                                 make_stiefel_problem, validate_problem)
from landingopt.solvers import (LandingConfig, landing_linesearch_solve,
                                newton_landing_step)


@contextlib.contextmanager
def criterion(num, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num} [{name}]: FAIL")
        raise
    print(f"ACCEPTANCE {num} [{name}]: PASS")


# ---------------------------------------------------------------------- runs

SPHERE_CFG = LandingConfig(eta=1e-4, beta_bt=0.5, rho=0.1,
                           grad_tol=1e-6, feas_tol=1e-8, max_iter=2000)


@pytest.fixture(scope="module")
def brockett_run():
    prob = make_stiefel_problem("brockett", 20, 3, 7)
    rng = np.random.Generator(np.random.PCG64(8))
    q, _ = np.linalg.qr(rng.standard_normal((20, 3)))
    cfg = LandingConfig(eta=1e-4, beta_bt=0.5, rho=0.1,
                        grad_tol=1e-6, feas_tol=1e-8, max_iter=4000)
    start = time.perf_counter()
    result = landing_linesearch_solve(prob, EuclideanMetric(), GRAM_EUCLID,
                                      cfg, prob.vec(q))
    elapsed = time.perf_counter() - start
    return prob, cfg, result, elapsed


def test_criterion_1_equivalence_suite():
    with criterion(1, "equivalence suite"):
        start = time.perf_counter()
        report = equivalence_suite(seed=0, size_profile="medium",
                                   n_instances=50, tol=1e-8)
        elapsed = time.perf_counter() - start
        assert report.passed
        assert max(report.deviations.values()) <= 1e-8
        assert elapsed <= 30.0


def test_criterion_2_stiefel_closed_forms_vs_generic():
    with criterion(2, "stiefel closed forms vs generic machinery"):
        rng = np.random.Generator(np.random.PCG64(2024))
        for seed in range(50):
            n = int(rng.integers(3, 13))
            p = int(rng.integers(1, min(4, n) + 1))
            prob = make_stiefel_problem("brockett", n, p, seed)
            xm = np.linalg.qr(rng.standard_normal((n, p)))[0] \
                + 0.6 * rng.standard_normal((n, p))
            x = prob.vec(xm)
            gm = prob.mat(prob.grad_f(x))

            def close(a, b, tol=1e-9):
                assert np.linalg.norm(a - b) <= tol * max(1.0, np.linalg.norm(b))

            close(prob.mat(tangent_step(prob, EuclideanMetric(), x)),
                  stiefel.euclidean_tangent_step(xm, gm))
            for h in (IDENTITY, GRAM_EUCLID):
                close(prob.mat(normal_step_pseudoinverse(
                          prob, EuclideanMetric(), x, h)),
                      stiefel.euclidean_normal_step(xm, h))
            met = stiefel_canonical_metric()
            d_t, d_n = stiefel.canonical_steps(xm, gm)
            close(prob.mat(tangent_step(prob, met, x)), d_t)
            close(prob.mat(normal_step_gradient(prob, met, x)), d_n)
            beta = float(rng.uniform(0.4, 2.0))
            met = stiefel_beta_metric(beta)
            d_t, d_n = stiefel.beta_steps(xm, gm, beta)
            close(prob.mat(tangent_step(prob, met, x)), d_t)
            close(prob.mat(normal_step_gradient(prob, met, x)), d_n)

            # Sylvester residual behind the Euclidean tangent step
            t_rhs = stiefel.sym(xm.T @ gm)
            s = sylvester_sym(xm, t_rhs)
            xtx = xm.T @ xm
            resid = np.linalg.norm(0.5 * (xtx @ s + s @ xtx) - t_rhs)
            assert resid <= 1e-10 * max(1.0, np.linalg.norm(t_rhs))


def _check_trace_certificates(cfg, result):
    # Armijo inequality and sufficient-decrease certificate per iteration
    assert len(result.diagnostics) == len(result.trace) - 1
    for diag in result.diagnostics:
        assert diag.armijo_lhs <= diag.armijo_rhs + 1e-12
        assert diag.dphi <= diag.decrease_bound + 1e-9
    # penalty monotone, bounded, and eventually constant
    mus = [row.mu for row in result.trace]
    assert all(b >= a for a, b in zip(mus, mus[1:]))
    assert mus[-1] == mus[-2]
    # summability inequality assembled from the trace
    rows = result.trace
    phi0 = rows[0].f + cfg.mu0 * rows[0].feas
    f_low = min(row.f for row in rows)
    r_obs = max(row.feas for row in rows)
    budget = phi0 - f_low + r_obs * (result.mu_final - cfg.mu0)
    total = sum(cfg.eta * row.alpha * (row.grad_norm_g**2
                                       + cfg.rho * cfg.mu0 * row.feas)
                for row in rows)
    assert total <= budget + 1e-6


def test_criterion_3_global_convergence(brockett_run):
    with criterion(3, "algorithm-1 global convergence"):
        # sphere instance
        prob = make_sphere_problem(2, np.array([1.0, 0.0]))
        start = time.perf_counter()
        res = landing_linesearch_solve(prob, EuclideanMetric(), IDENTITY,
                                       SPHERE_CFG, np.array([0.5, 1.2]))
        sphere_time = time.perf_counter() - start
        assert res.status == solvers.CONVERGED
        assert sphere_time <= 10.0
        assert np.linalg.norm(res.final_x - [-1.0, 0.0]) <= 1e-6
        _check_trace_certificates(SPHERE_CFG, res)

        # Brockett instance
        prob_b, cfg_b, res_b, elapsed_b = brockett_run
        assert res_b.status == solvers.CONVERGED
        assert elapsed_b <= 10.0
        assert res_b.trace[-1].feas <= 1e-8
        _check_trace_certificates(cfg_b, res_b)

        # dense eigendecomposition oracle for the optimal value:
        # weights (p, ..., 1) pair with the p smallest eigenvalues
        a = prob_b.extras["a"]
        weights = prob_b.extras["weights"]
        lam = np.sort(np.linalg.eigvalsh(a))
        f_star = 0.5 * float(weights @ lam[:len(weights)])
        assert abs(res_b.trace[-1].f - f_star) <= 1e-6


def test_criterion_4_rate_envelopes(brockett_run):
    with criterion(4, "complexity rate envelopes"):
        prob_b, cfg_b, res_b, _ = brockett_run
        rows = res_b.trace
        steps = [row for row in rows if row.alpha > 0.0]
        phi0 = rows[0].f + cfg_b.mu0 * rows[0].feas
        f_low = min(row.f for row in rows)
        r_obs = max(row.feas for row in rows)
        alpha_low = min(row.alpha for row in steps)
        budget = phi0 - f_low + r_obs * (res_b.mu_final - cfg_b.mu0)
        c1 = budget / (cfg_b.eta * alpha_low)
        c2 = c1 / (cfg_b.rho * cfg_b.mu0)
        grads = np.array([row.grad_norm_g for row in rows])
        feas = np.array([row.feas for row in rows])
        for big_k in range(1, len(rows) + 1):
            assert grads[:big_k].min() <= c1 / np.sqrt(big_k)
            assert feas[:big_k].min() <= c2 / big_k


def _sphere_quadratic_problem(a_diag, b):
    a = np.diag(np.asarray(a_diag, dtype=float))
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    return ProblemInstance(
        dim_e=n, dim_f=1,
        f=lambda x: 0.5 * x @ a @ x + b @ x,
        grad_f=lambda x: a @ x + b,
        c=lambda x: np.array([0.5 * (x @ x - 1.0)]),
        dc=lambda x, xi: np.array([x @ xi]),
        dc_adjoint=lambda x, y: y[0] * x,
        hess_lagrangian=lambda x, lam, xi: a @ xi - lam[0] * xi,
        name="sphere-quadratic",
        dc_matrix_fn=lambda x: np.asarray(x, float).reshape(1, -1).copy())


def _sphere_quadratic_minimizer(a_diag, b):
    # independent oracle: secular-equation bracket + Newton on the KKT system
    from scipy.optimize import brentq
    a = np.diag(np.asarray(a_diag, dtype=float))
    b = np.asarray(b, dtype=float)
    n = len(a_diag)
    lam0 = brentq(
        lambda t: np.linalg.solve(a - t * np.eye(n), -b)
        @ np.linalg.solve(a - t * np.eye(n), -b) - 1.0,
        -500.0, min(a_diag) - 1e-9)
    z = np.concatenate([np.linalg.solve(a - lam0 * np.eye(n), -b), [lam0]])
    for _ in range(80):
        x, lam = z[:n], z[n]
        res = np.concatenate([a @ x + b - lam * x, [0.5 * (x @ x - 1.0)]])
        jac = np.vstack([
            np.hstack([a - lam * np.eye(n), -x.reshape(-1, 1)]),
            np.hstack([x, [0.0]]).reshape(1, -1)])
        z = z - np.linalg.solve(jac, res)
    return z[:n]


def test_criterion_5_newton_landing_rates():
    with criterion(5, "newton landing quadratic-rate contrast"):
        # a sphere quadratic whose minimizer is not an eigenvector, so the
        # Lagrangian-orthogonal and Euclidean normal spaces differ at the
        # solution (a pure quadratic on the sphere is degenerate for the
        # contrast: its minimizers are eigenvectors)
        a_diag = [1.0, 1.05]
        b = np.array([0.3, 0.2])
        prob = _sphere_quadratic_problem(a_diag, b)
        xstar = _sphere_quadratic_minimizer(a_diag, b)
        th = np.deg2rad(120.0)
        x0 = xstar + 1e-2 * np.array([np.cos(th), np.sin(th)])

        def error_sequence(normal_space):
            errs = []
            x = x0.copy()
            for _ in range(30):
                e = float(np.linalg.norm(x - xstar))
                errs.append(e)
                if e <= 1e-14:
                    break
                x = x + newton_landing_step(prob, x, normal_space=normal_space)
            return errs

        fit_quad = estimate_order(error_sequence("lagrangian"))
        fit_slow = estimate_order(error_sequence("euclidean"))
        assert fit_quad.fitted_order >= 1.8
        assert fit_slow.fitted_order <= 1.3


def test_criterion_6_derivative_correctness():
    with criterion(6, "derivative and adjoint correctness"):
        rng = np.random.Generator(np.random.PCG64(66))
        builtins = [
            make_sphere_problem(5, rng.standard_normal(5)),
            make_stiefel_problem("brockett", 6, 2, 1),
            make_stiefel_problem("procrustes", 5, 3, 2),
        ]
        for prob in builtins:
            pts = [rng.standard_normal(prob.dim_e) for _ in range(6)]
            report = validate_problem(prob, pts)
            assert report.passed
            assert report.max_grad_error <= 1e-6
            assert report.max_adjoint_error <= 1e-10
        # -normal_step_gradient equals the finite-difference gradient of psi
        prob = make_stiefel_problem("brockett", 5, 2, 3)
        for _ in range(20):
            x = rng.standard_normal(prob.dim_e) * 0.9
            d = normal_step_gradient(prob, EuclideanMetric(), x)
            fd = fd_gradient(prob.infeasibility, x)
            assert np.linalg.norm(fd + d) / max(1.0, np.linalg.norm(fd)) <= 1e-6


def test_criterion_7_deterministic_traces(tmp_path):
    with criterion(7, "byte-identical traces"):
        out = tmp_path / "det"
        cfg_text = (
            "problem.kind = brockett\nproblem.n = 10\nproblem.p = 2\n"
            "problem.seed = 7\nmetric.kind = euclidean\n"
            "normal_op = gram_euclid\nsolver = landing_ls\nls.rho = 0.1\n"
            f"out = {out}\n")
        path = tmp_path / "det.cfg"
        path.write_text(cfg_text, encoding="utf-8")
        assert cli.cmd_run(str(path)) == cli.EXIT_OK
        first = (out / "trace.csv").read_bytes()
        assert cli.cmd_run(str(path)) == cli.EXIT_OK
        second = (out / "trace.csv").read_bytes()
        assert first == second
