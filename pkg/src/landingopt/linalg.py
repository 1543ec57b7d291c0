"""Dense linear-algebra kernels: guarded SVD, SPD solves, and the
structured Sylvester solver used for orthogonality constraints.

All routines are pure functions on numpy arrays and stay dense; the
intended scale is desk-sized (n up to a few thousand, p up to ~50).
"""

import numpy as np
import scipy.linalg

from .exceptions import NotPositiveDefiniteError, RankDeficientError

# Relative rank tolerance: sigma_min must exceed RANK_TOL * sigma_max.
RANK_TOL = 1e-10


class SvdFactors:
    """Thin SVD of a full-column-rank matrix, sigma sorted nonincreasing."""

    def __init__(self, u, sigma, v):
        self.u = u          # (rows, p), orthonormal columns
        self.sigma = sigma  # (p,), positive, nonincreasing
        self.v = v          # (cols, p), orthonormal columns

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def svd(x):
    """Thin SVD with a full-column-rank guard.

    Raises RankDeficientError when sigma_min <= RANK_TOL * sigma_max,
    which signals a violated constraint qualification at the caller.
    """
    x = np.asarray(x, dtype=float)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"matrix is rank deficient: sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e}"
        )
    return SvdFactors(u, s, vt.T)


def solve_spd(a, b):
    """Solve a @ x = b for symmetric positive definite a via Cholesky."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    asym = np.linalg.norm(a - a.T)
    if asym > 1e-12 * max(1.0, np.linalg.norm(a)):
        raise NotPositiveDefiniteError(f"matrix is not symmetric: |A - A^T| = {asym:.3e}")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"Cholesky failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def sylvester_sym(x, t):
    """Solve (1/2)(X^T X S + S X^T X) = T for symmetric S.

    X must have full column rank and T must be symmetric.  The solve goes
    through the eigendecomposition of X^T X (the spectral route), which is
    exact for this SPD-coefficient equation: with X^T X = V diag(lam) V^T,

        S = V M V^T,   M_ij = 2 (V^T T V)_ij / (lam_i + lam_j).
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    factors = svd(x)  # also enforces the rank guard
    lam = factors.sigma**2
    v = factors.v
    t_hat = v.T @ (0.5 * (t + t.T)) @ v
    m = 2.0 * t_hat / (lam[:, None] + lam[None, :])
    s = v @ m @ v.T
    return 0.5 * (s + s.T)
