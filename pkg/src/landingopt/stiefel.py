"""Closed-form landing steps for orthogonality constraints c(X) = (X^T X - I)/2.

Everything here works directly on n x p matrices and bypasses the dense
generic machinery; agreement between the two routes is part of the test
suite.  Supported metrics: Euclidean (Frobenius), the canonical metric
g(xi, zeta) = <xi, (X X^T + I - X (X^T X)^{-1} X^T) zeta>, and the
beta-family g^beta(xi, zeta) = <(I - (1-beta) X (X^T X)^{-1} X^T) zeta (X^T X)^{-1}, xi>.
"""

import numpy as np
import scipy.linalg

from .exceptions import RankDeficientError
from .linalg import RANK_TOL, sylvester_sym
from .metrics import _normal_kind

# below this Frobenius distance to feasibility the normal step is exactly 0
FEASIBLE_EPS = 1e-14


def sym(a):
    return 0.5 * (a + a.T)


def skew(a):
    return 0.5 * (a - a.T)


def _gram_factor(x):
    """Cholesky factor of X^T X after a full-column-rank check."""
    s = np.linalg.svd(x, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"X is rank deficient: sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e}"
        )
    return scipy.linalg.cho_factor(x.T @ x, lower=True, check_finite=False)


def _gram_solve(factor, rhs):
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def oblique_project(x, z):
    """Split Z into tangent and normal parts of the oblique Stiefel projector.

    tangent = X (X^T X)^{-1} skew(X^T Z) + (I - X (X^T X)^{-1} X^T) Z,
    normal  = X (X^T X)^{-1} sym(X^T Z); the parts sum back to Z and the
    tangent part satisfies sym(X^T tangent) = 0.
    """
    factor = _gram_factor(x)
    xtz = x.T @ z
    normal = x @ _gram_solve(factor, sym(xtz))
    return z - normal, normal


def euclidean_tangent_step(x, grad_f):
    """Euclidean-metric tangent step -grad_f + X S with S from the
    Sylvester equation (X^T X S + S X^T X)/2 = sym(X^T grad_f)."""
    s = sylvester_sym(x, sym(x.T @ grad_f))
    return -grad_f + x @ s


def _feasibility_gap(x):
    p = x.shape[1]
    return np.linalg.norm(x.T @ x - np.eye(p))


def euclidean_normal_step(x, h):
    """Euclidean-metric normal step for the chosen operator H.

    H = Id gives -X(I - (X^T X)^{-1})/2; H = Dc Dc* (the same operator for
    the Euclidean metric whether taken as gram_g or gram_euclid) gives the
    infeasibility gradient -Dc*[c(X)] = -X(X^T X - I)/2.
    """
    kind = _normal_kind(h)
    p = x.shape[1]
    if _feasibility_gap(x) <= FEASIBLE_EPS:
        return np.zeros_like(x)
    factor = _gram_factor(x)
    if kind == "identity":
        return -0.5 * (x - x @ _gram_solve(factor, np.eye(p)))
    return -0.5 * x @ (x.T @ x - np.eye(p))


def canonical_steps(x, grad_f):
    """Tangent and normal steps in the canonical metric."""
    factor = _gram_factor(x)
    p = x.shape[1]
    xtg = x.T @ grad_f
    d_t = -x @ _gram_solve(factor, skew(_gram_solve(factor, xtg))) \
        - (grad_f - x @ _gram_solve(factor, xtg))
    if _feasibility_gap(x) <= FEASIBLE_EPS:
        d_n = np.zeros_like(x)
    else:
        d_n = -0.5 * (x - x @ _gram_solve(factor, np.eye(p)))
    return d_t, d_n


def beta_steps(x, grad_f, beta):
    """Tangent and normal steps in the beta-metric with H = Dc Dc*^{g^beta}."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    factor = _gram_factor(x)
    xtx = x.T @ x
    xtg = x.T @ grad_f
    d_t = -(1.0 / beta) * x @ skew(_gram_solve(factor, xtg)) @ xtx \
        - (grad_f - x @ _gram_solve(factor, xtg)) @ xtx
    if _feasibility_gap(x) <= FEASIBLE_EPS:
        d_n = np.zeros_like(x)
    else:
        p = x.shape[1]
        d_n = -(0.5 / beta) * x @ (xtx - np.eye(p)) @ xtx
    return d_t, d_n


def beta_tangent_step_expanded(x, grad_f, beta):
    """Algebraically expanded form of the beta-metric tangent step; must
    agree with beta_steps to round-off.  Expanding skew in the closed form
    gives -grad XtX + X grad^T X / (2 beta) + (1 - 1/(2 beta)) Pi grad XtX."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    factor = _gram_factor(x)
    xtx = x.T @ x
    half = 0.5 / beta
    return (-grad_f @ xtx
            + half * x @ grad_f.T @ x
            + (1.0 - half) * x @ _gram_solve(factor, x.T @ grad_f) @ xtx)


def stiefel_metric_eval(kind, x, xi, zeta, beta=None):
    """Inner product g_X(xi, zeta) for one of the supported metric kinds."""
    if kind == "euclidean":
        return float(np.sum(xi * zeta))
    factor = _gram_factor(x)
    if kind == "canonical":
        pi_zeta = x @ _gram_solve(factor, x.T @ zeta)
        return float(np.sum(xi * (x @ (x.T @ zeta) + zeta - pi_zeta)))
    if kind == "beta":
        if beta is None or beta <= 0:
            raise ValueError("beta metric needs beta > 0")
        pi_zeta = x @ _gram_solve(factor, x.T @ zeta)
        weighted = _gram_solve(factor, (zeta - (1.0 - beta) * pi_zeta).T).T
        return float(np.sum(weighted * xi))
    raise ValueError(f"unknown stiefel metric kind {kind!r}")
