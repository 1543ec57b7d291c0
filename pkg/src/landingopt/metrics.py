"""Generic dense metric machinery: oblique projectors, metrics built from
tangent/normal restrictions, g-pseudoinverses, and landing steps.

A metric is either Euclidean or "constructed" from three operator fields:
an oblique projector onto the tangent space of the constraint level set,
and symmetric restrictions G_T / G_N that are positive definite on the
tangent and normal subspaces.  Constructed metrics are evaluated on
explicit dense bases: a tangent basis from the SVD null space of Dc(x)
and a normal basis obtained by pushing the row-space basis through the
complementary projector.
"""

import numpy as np

from . import linalg
from .exceptions import MetricNotPDError, RankDeficientError
from .linalg import solve_spd


class EuclideanMetric:
    """Flat metric; every step has its textbook closed form."""

    kind = "euclidean"

    def __repr__(self):
        return "EuclideanMetric()"


class ConstructedMetric:
    """Metric assembled from (projector, G_T, G_N) operator fields.

    Each field is a callable (prob, x, v) -> vector in E.  `projector`
    must be idempotent with range equal to ker Dc(x); `g_tangent` and
    `g_normal` must be Euclidean-symmetric and positive definite on the
    tangent and normal subspaces.
    """

    kind = "constructed"

    def __init__(self, projector, g_tangent, g_normal, label="constructed"):
        self.projector = projector
        self.g_tangent = g_tangent
        self.g_normal = g_normal
        self.label = label

    def __repr__(self):
        return f"ConstructedMetric({self.label!r})"


class NormalOperatorChoice:
    """Operator H(x) on F driving the constraint decay: one of
    identity (Id_F), gram_g (Dc Dc*^g), gram_euclid (Dc Dc*^E)."""

    KINDS = ("identity", "gram_g", "gram_euclid")

    def __init__(self, kind):
        if kind not in self.KINDS:
            raise ValueError(f"unknown normal operator kind {kind!r}")
        self.kind = kind

    def __repr__(self):
        return f"NormalOperatorChoice({self.kind!r})"


IDENTITY = NormalOperatorChoice("identity")
GRAM_G = NormalOperatorChoice("gram_g")
GRAM_EUCLID = NormalOperatorChoice("gram_euclid")


def _normal_kind(h):
    if isinstance(h, NormalOperatorChoice):
        return h.kind
    if isinstance(h, str):
        return NormalOperatorChoice(h).kind
    raise TypeError(f"expected NormalOperatorChoice or str, got {type(h)}")


def _cho_inv_apply(xtx, rhs):
    import scipy.linalg
    factor = scipy.linalg.cho_factor(xtx, lower=True, check_finite=False)
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def stiefel_canonical_metric():
    """Constructed metric reproducing the canonical Stiefel landing steps.

    Projector: Proj_X[Z] = X (X^T X)^{-1} skew(X^T Z) + (I - X (X^T X)^{-1} X^T) Z.
    Restrictions: G_T[Z] = X X^T Z + (I - X (X^T X)^{-1} X^T) Z, G_N[Z] = X X^T Z.
    """

    def projector(prob, x, v):
        xm = prob.mat(x)
        zm = prob.mat(v)
        xtz = xm.T @ zm
        sym = 0.5 * (xtz + xtz.T)
        return prob.vec(zm - xm @ _cho_inv_apply(xm.T @ xm, sym))

    def g_tangent(prob, x, v):
        xm = prob.mat(x)
        zm = prob.mat(v)
        xtz = xm.T @ zm
        return prob.vec(xm @ xtz + zm - xm @ _cho_inv_apply(xm.T @ xm, xtz))

    def g_normal(prob, x, v):
        xm = prob.mat(x)
        zm = prob.mat(v)
        return prob.vec(xm @ (xm.T @ zm))

    return ConstructedMetric(projector, g_tangent, g_normal, label="stiefel_canonical")


def stiefel_beta_metric(beta):
    """Constructed metric for the one-parameter Stiefel family g^beta.

    g^beta(xi, zeta) = <(I - (1 - beta) X (X^T X)^{-1} X^T) zeta (X^T X)^{-1}, xi>.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")

    def projector(prob, x, v):
        xm = prob.mat(x)
        zm = prob.mat(v)
        xtz = xm.T @ zm
        sym = 0.5 * (xtz + xtz.T)
        return prob.vec(zm - xm @ _cho_inv_apply(xm.T @ xm, sym))

    def g_tangent(prob, x, v):
        xm = prob.mat(x)
        zm = prob.mat(v)
        xtx = xm.T @ xm
        pi_z = xm @ _cho_inv_apply(xtx, xm.T @ zm)
        return prob.vec(np.linalg.solve(xtx, (zm - pi_z + beta * pi_z).T).T)

    def g_normal(prob, x, v):
        xm = prob.mat(x)
        zm = prob.mat(v)
        xtx = xm.T @ xm
        pi_z = xm @ _cho_inv_apply(xtx, xm.T @ zm)
        return prob.vec(beta * np.linalg.solve(xtx, pi_z.T).T)

    metric = ConstructedMetric(projector, g_tangent, g_normal, label="stiefel_beta")
    metric.beta = beta
    return metric


def dc_matrix(prob, x):
    """Materialize Dc(x) as a dense (dim_f, dim_e) matrix.

    Uses the problem's analytic materializer when it has one; otherwise
    probes dc on the standard basis, column by column.
    """
    if getattr(prob, "dc_matrix_fn", None) is not None:
        return np.asarray(prob.dc_matrix_fn(x), dtype=float)
    n = prob.dim_e
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(prob.dc(x, e))
    return np.array(cols).T


def _guard_full_row_rank(jac):
    s = np.linalg.svd(jac, compute_uv=False)
    if s[-1] <= linalg.RANK_TOL * s[0]:
        raise RankDeficientError(
            f"Dc(x) is rank deficient: sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e}"
        )


def constraint_bases(jac):
    """Orthonormal bases of ker Dc(x) (tangent) and of the row space."""
    m, n = jac.shape
    _guard_full_row_rank(jac)
    _, _, vt = np.linalg.svd(jac, full_matrices=True)
    row_basis = vt[:m].T
    tangent = vt[m:].T
    return tangent, row_basis


def euclid_pseudoinverse_apply(prob, x, w, jac=None):
    """Dc(x)^{dagger,E} w = Dc* (Dc Dc*)^{-1} w, the Euclidean right inverse."""
    if jac is None:
        jac = dc_matrix(prob, x)
    _guard_full_row_rank(jac)
    return jac.T @ solve_spd(jac @ jac.T, w)


def projector_apply(prob, metric, x, v, jac=None):
    """Apply the metric's tangent projector to v."""
    if isinstance(metric, EuclideanMetric):
        if jac is None:
            jac = dc_matrix(prob, x)
        return v - euclid_pseudoinverse_apply(prob, x, jac @ v, jac=jac)
    return metric.projector(prob, x, v)


def projector_perp_apply(prob, metric, x, v, jac=None):
    return v - projector_apply(prob, metric, x, v, jac=jac)


def _applied_basis(apply_one, basis):
    return np.column_stack([apply_one(basis[:, i]) for i in range(basis.shape[1])])


def _galerkin_matrix(prob, metric, x, restriction, basis_proj):
    cols = _applied_basis(lambda v: restriction(prob, x, v), basis_proj)
    mat = basis_proj.T @ cols
    return 0.5 * (mat + mat.T)


def _assert_pd(mat, what):
    if np.linalg.eigvalsh(mat).min() <= 0.0:
        raise MetricNotPDError(f"{what} restriction is not positive definite on probes")


def _normal_basis(prob, metric, x, row_basis):
    """Orthonormal basis of N_x = ker(Proj_x), from Proj_perp of the row space."""
    pushed = _applied_basis(
        lambda v: projector_perp_apply(prob, metric, x, v), row_basis
    )
    u, s, _ = np.linalg.svd(pushed, full_matrices=False)
    if s[-1] <= linalg.RANK_TOL * max(1.0, s[0]):
        raise MetricNotPDError("normal space basis is degenerate for this projector")
    return u


def tangent_step(prob, metric, x, jac=None, grad=None):
    """d_T(x) = -grad_{M_x}^g f(x), the negative constrained gradient."""
    if jac is None:
        jac = dc_matrix(prob, x)
    if grad is None:
        grad = prob.grad_f(x)
    if isinstance(metric, EuclideanMetric):
        return -(grad - euclid_pseudoinverse_apply(prob, x, jac @ grad, jac=jac))
    tangent, _ = constraint_bases(jac)
    proj_t = _applied_basis(lambda v: projector_apply(prob, metric, x, v), tangent)
    mat = _galerkin_matrix(prob, metric, x, metric.g_tangent, proj_t)
    _assert_pd(mat, "tangent")
    rhs = proj_t.T @ grad
    return -(tangent @ solve_spd(mat, rhs))


def normal_step_gradient(prob, metric, x, jac=None):
    """d_N(x) = -grad_g psi(x) = -G(x)^{-1} Dc* c(x)."""
    if jac is None:
        jac = dc_matrix(prob, x)
    cx = prob.c(x)
    if isinstance(metric, EuclideanMetric):
        return -(jac.T @ cx)
    _, row_basis = constraint_bases(jac)
    normal = _normal_basis(prob, metric, x, row_basis)
    proj_n = _applied_basis(
        lambda v: projector_perp_apply(prob, metric, x, v, jac=jac), normal
    )
    mat = _galerkin_matrix(prob, metric, x, metric.g_normal, proj_n)
    _assert_pd(mat, "normal")
    rhs = proj_n.T @ (jac.T @ cx)
    return -(normal @ solve_spd(mat, rhs))


def gram_operator(prob, metric, x, jac=None):
    """Dense matrix of Dc Dc*^g on F, symmetric positive definite on D."""
    if jac is None:
        jac = dc_matrix(prob, x)
    _guard_full_row_rank(jac)
    if isinstance(metric, EuclideanMetric):
        mat = jac @ jac.T
    else:
        cols = np.column_stack(
            [metric_inverse_apply(prob, metric, x, jac.T[:, i], jac=jac)
             for i in range(prob.dim_f)]
        )
        mat = jac @ cols
    return 0.5 * (mat + mat.T)


def apply_normal_operator(prob, metric, x, h, w, jac=None):
    """Apply the chosen H(x) to an F-vector."""
    kind = _normal_kind(h)
    if kind == "identity":
        return np.asarray(w, dtype=float)
    if jac is None:
        jac = dc_matrix(prob, x)
    if kind == "gram_euclid":
        return jac @ (jac.T @ w)
    return gram_operator(prob, metric, x, jac=jac) @ w


def normal_operator_matrix(prob, metric, x, h, jac=None):
    kind = _normal_kind(h)
    if jac is None:
        jac = dc_matrix(prob, x)
    if kind == "identity":
        return np.eye(prob.dim_f)
    if kind == "gram_euclid":
        return jac @ jac.T
    return gram_operator(prob, metric, x, jac=jac)


def normal_step_pseudoinverse(prob, metric, x, h, jac=None):
    """Pseudoinverse normal step d_N(x) = -Proj_perp Dc^{dagger,E} H(x) c(x).

    Depends on the metric only through its normal space; satisfies
    Dc(x) d_N = -H(x) c(x) and is the minimum g-norm solution of that
    underdetermined system.
    """
    if jac is None:
        jac = dc_matrix(prob, x)
    cx = prob.c(x)
    w = apply_normal_operator(prob, metric, x, h, cx, jac=jac)
    v = euclid_pseudoinverse_apply(prob, x, w, jac=jac)
    if isinstance(metric, EuclideanMetric):
        return -v
    return -projector_perp_apply(prob, metric, x, v, jac=jac)


def landing_direction(prob, metric, x, h, jac=None):
    """Tangent step, pseudoinverse normal step, and their sum."""
    if jac is None:
        jac = dc_matrix(prob, x)
    d_t = tangent_step(prob, metric, x, jac=jac)
    d_n = normal_step_pseudoinverse(prob, metric, x, h, jac=jac)
    return d_t, d_n, d_t + d_n


def metric_inner(prob, metric, x, u, v, jac=None):
    """g_x(u, v)."""
    if isinstance(metric, EuclideanMetric):
        return float(np.dot(u, v))
    pu = projector_apply(prob, metric, x, u, jac=jac)
    qu = u - pu
    pv = projector_apply(prob, metric, x, v, jac=jac)
    qv = v - pv
    return float(pu @ metric.g_tangent(prob, x, pv) + qu @ metric.g_normal(prob, x, qv))


def metric_norm(prob, metric, x, v, jac=None):
    val = metric_inner(prob, metric, x, v, v, jac=jac)
    return float(np.sqrt(max(val, 0.0)))


def metric_inverse_apply(prob, metric, x, v, jac=None):
    """Apply G(x)^{-1} through the block-diagonal inverse on dense bases."""
    if isinstance(metric, EuclideanMetric):
        return np.asarray(v, dtype=float)
    if jac is None:
        jac = dc_matrix(prob, x)
    tangent, row_basis = constraint_bases(jac)
    proj_t = _applied_basis(lambda w: projector_apply(prob, metric, x, w), tangent)
    mat_t = _galerkin_matrix(prob, metric, x, metric.g_tangent, proj_t)
    _assert_pd(mat_t, "tangent")
    u_t = tangent @ solve_spd(mat_t, proj_t.T @ v)
    normal = _normal_basis(prob, metric, x, row_basis)
    proj_n = _applied_basis(
        lambda w: projector_perp_apply(prob, metric, x, w, jac=jac), normal
    )
    mat_n = _galerkin_matrix(prob, metric, x, metric.g_normal, proj_n)
    _assert_pd(mat_n, "normal")
    u_n = normal @ solve_spd(mat_n, proj_n.T @ v)
    return u_t + u_n


def normal_operator_min_eig(prob, metric, x, h, jac=None):
    """Smallest eigenvalue of H(x), used to validate the rho parameter."""
    kind = _normal_kind(h)
    if kind == "identity":
        return 1.0
    mat = normal_operator_matrix(prob, metric, x, h, jac=jac)
    return float(np.linalg.eigvalsh(mat).min())
