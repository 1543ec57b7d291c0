"""Equality-constrained problem instances and built-in desk-scale examples.

A problem bundles the objective f, its Euclidean gradient, the constraint
map c into a Euclidean space F, the differential Dc, and the Euclidean
adjoint Dc*.  Points live in E as flat float vectors; matrix-shaped
problems record an (n, p) shape and flatten column-major.

The constraint space of orthogonality problems is Sym(p), stored as
p(p+1)/2 coefficients with off-diagonal entries scaled by sqrt(2) so that
the coefficient inner product equals the matrix Frobenius product.
"""

import numpy as np

from .exceptions import ValidationFailedError

_EPS = np.finfo(float).eps

GRAD_FD_TOL = 1e-6
ADJOINT_TOL = 1e-10
LINEARITY_TOL = 1e-12


def sym_dim(p):
    return p * (p + 1) // 2


def sym_to_vec(s):
    """Isometric coefficients of a symmetric matrix (upper triangle, row-major)."""
    p = s.shape[0]
    iu, ju = np.triu_indices(p)
    scale = np.where(iu == ju, 1.0, np.sqrt(2.0))
    return s[iu, ju] * scale


def vec_to_sym(v, p):
    """Inverse of sym_to_vec."""
    iu, ju = np.triu_indices(p)
    scale = np.where(iu == ju, 1.0, np.sqrt(2.0))
    s = np.zeros((p, p))
    s[iu, ju] = v / scale
    return s + np.triu(s, 1).T


class ProblemInstance:
    """Evaluation bundle for min f(x) subject to c(x) = 0.

    Parameters
    ----------
    dim_e, dim_f : int
        Dimensions of the ambient space E and the constraint space F.
    f, grad_f : callables on flat vectors
        Objective value and Euclidean gradient.
    c : callable
        Constraint values as a length-dim_f vector.
    dc : callable (x, xi) -> F-vector
        Differential of c applied to a direction.
    dc_adjoint : callable (x, y) -> E-vector
        Euclidean adjoint of dc.
    hess_lagrangian : callable (x, lam, xi) -> E-vector, optional
        Product of the Euclidean Lagrangian Hessian with xi, for the
        Lagrangian L(x, lam) = f(x) - <lam, c(x)>.  When absent it is
        approximated by central differences of the Lagrangian gradient.
    matrix_shape : (n, p), optional
        Set for matrix problems; vectors are column-major flattenings.
    """

    def __init__(self, dim_e, dim_f, f, grad_f, c, dc, dc_adjoint,
                 hess_lagrangian=None, name="", matrix_shape=None,
                 dc_matrix_fn=None):
        self.dim_e = int(dim_e)
        self.dim_f = int(dim_f)
        self.f = f
        self.grad_f = grad_f
        self.c = c
        self.dc = dc
        self.dc_adjoint = dc_adjoint
        self.name = name
        self.matrix_shape = matrix_shape
        self._hess_lagrangian = hess_lagrangian
        # optional analytic materializer for Dc(x); the generic machinery
        # falls back to probing dc on basis vectors when absent
        self.dc_matrix_fn = dc_matrix_fn

    def mat(self, x):
        n, p = self.matrix_shape
        return np.asarray(x).reshape((n, p), order="F")

    def vec(self, m):
        return np.asarray(m).reshape(-1, order="F")

    def lagrangian_grad(self, x, lam):
        return self.grad_f(x) - self.dc_adjoint(x, lam)

    def hess_lagrangian(self, x, lam, xi):
        if self._hess_lagrangian is not None:
            return self._hess_lagrangian(x, lam, xi)
        norm = np.linalg.norm(xi)
        if norm == 0.0:
            return np.zeros(self.dim_e)
        u = xi / norm
        h = np.sqrt(_EPS) * max(1.0, np.linalg.norm(x))
        gp = self.lagrangian_grad(x + h * u, lam)
        gm = self.lagrangian_grad(x - h * u, lam)
        return (gp - gm) * (norm / (2.0 * h))

    def infeasibility(self, x):
        """psi(x) = 0.5 * |c(x)|^2."""
        cx = self.c(x)
        return 0.5 * float(cx @ cx)

    def __repr__(self):
        return f"ProblemInstance({self.name!r}, dim_e={self.dim_e}, dim_f={self.dim_f})"


def make_sphere_problem(n, linear_cost):
    """Linear objective on the unit sphere: c(x) = (|x|^2 - 1) / 2."""
    if n < 2:
        raise ValueError("sphere problem needs n >= 2")
    cost = np.asarray(linear_cost, dtype=float)
    if cost.shape != (n,):
        raise ValueError(f"linear_cost must have length {n}")

    def hess_lagrangian(x, lam, xi):
        # f linear, c quadratic with Hessian lam[0] * I
        return -lam[0] * xi

    return ProblemInstance(
        dim_e=n,
        dim_f=1,
        f=lambda x: float(cost @ x),
        grad_f=lambda x: cost.copy(),
        c=lambda x: np.array([0.5 * (x @ x - 1.0)]),
        dc=lambda x, xi: np.array([x @ xi]),
        dc_adjoint=lambda x, y: y[0] * x,
        hess_lagrangian=hess_lagrangian,
        name=f"sphere(n={n})",
        dc_matrix_fn=lambda x: np.asarray(x, dtype=float).reshape(1, -1).copy(),
    )


def _stiefel_constraint_parts(n, p):
    dim_f = sym_dim(p)

    def c(x):
        xm = x.reshape((n, p), order="F")
        return sym_to_vec(0.5 * (xm.T @ xm - np.eye(p)))

    def dc(x, xi):
        xm = x.reshape((n, p), order="F")
        xim = xi.reshape((n, p), order="F")
        prod = xm.T @ xim
        return sym_to_vec(0.5 * (prod + prod.T))

    def dc_adjoint(x, y):
        xm = x.reshape((n, p), order="F")
        return (xm @ vec_to_sym(y, p)).reshape(-1, order="F")

    def dc_matrix_fn(x):
        xm = x.reshape((n, p), order="F")
        iu, ju = np.triu_indices(p)
        jac = np.zeros((dim_f, n * p))
        for k, (i, j) in enumerate(zip(iu, ju)):
            half = 0.5 * np.sqrt(2.0) if i != j else 0.5
            block = np.zeros((n, p))
            block[:, j] += half * xm[:, i]
            block[:, i] += half * xm[:, j]
            jac[k] = block.reshape(-1, order="F")
        return jac

    return dim_f, c, dc, dc_adjoint, dc_matrix_fn


def make_stiefel_problem(kind, n, p, seed):
    """Orthogonality-constrained test problem: c(X) = (X^T X - I) / 2.

    kind "brockett": f(X) = 0.5 * trace(X^T A X N) with A a seeded random
    symmetric n x n matrix and N = diag(p, ..., 1).  kind "procrustes":
    f(X) = 0.5 * |A X - B|^2 with seeded random A (n x n) and B (n x p).
    Randomness uses numpy's PCG64 generator seeded with the given 64-bit
    seed, so instances reproduce bit-for-bit.
    """
    if not 1 <= p <= n:
        raise ValueError("need 1 <= p <= n")
    rng = np.random.Generator(np.random.PCG64(seed))
    dim_f, c, dc, dc_adjoint, dc_matrix_fn = _stiefel_constraint_parts(n, p)

    if kind == "brockett":
        b = rng.standard_normal((n, n))
        a = 0.5 * (b + b.T)
        nw = np.arange(p, 0, -1, dtype=float)  # diag(p, ..., 1)

        def f(x):
            xm = x.reshape((n, p), order="F")
            return 0.5 * float(np.trace(xm.T @ a @ xm @ np.diag(nw)))

        def grad_f(x):
            xm = x.reshape((n, p), order="F")
            return (a @ xm * nw).reshape(-1, order="F")

        def hess_f(xm_dir):
            return a @ xm_dir * nw

    elif kind == "procrustes":
        a = rng.standard_normal((n, n))
        b_target = rng.standard_normal((n, p))

        def f(x):
            xm = x.reshape((n, p), order="F")
            r = a @ xm - b_target
            return 0.5 * float(np.sum(r * r))

        def grad_f(x):
            xm = x.reshape((n, p), order="F")
            return (a.T @ (a @ xm - b_target)).reshape(-1, order="F")

        def hess_f(xm_dir):
            return a.T @ (a @ xm_dir)

    else:
        raise ValueError(f"unknown stiefel problem kind {kind!r}")

    def hess_lagrangian(x, lam, xi):
        xim = xi.reshape((n, p), order="F")
        lam_mat = vec_to_sym(lam, p)
        return (hess_f(xim) - xim @ lam_mat).reshape(-1, order="F")

    prob = ProblemInstance(
        dim_e=n * p,
        dim_f=dim_f,
        f=f,
        grad_f=grad_f,
        c=c,
        dc=dc,
        dc_adjoint=dc_adjoint,
        hess_lagrangian=hess_lagrangian,
        name=f"{kind}(n={n},p={p},seed={seed})",
        matrix_shape=(n, p),
        dc_matrix_fn=dc_matrix_fn,
    )
    if kind == "brockett":
        prob.extras = {"a": a, "weights": nw}
    else:
        prob.extras = {"a": a, "b": b_target}
    return prob


def make_random_problem(n, m, seed):
    """Random smooth instance with quadratic objective and constraints.

    f(x) = <g0, x> + x^T P x / 2 and c_i(x) = <a_i, x> + x^T Q_i x / 2 - b_i
    with all data drawn from a PCG64 generator.  The quadratic constraint
    terms are small so random trial points keep Dc full rank.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    rng = np.random.Generator(np.random.PCG64(seed))
    g0 = rng.standard_normal(n)
    pm = rng.standard_normal((n, n))
    pmat = 0.5 * (pm + pm.T)
    amat = rng.standard_normal((m, n))
    qs = []
    for _ in range(m):
        q = rng.standard_normal((n, n))
        qs.append(0.1 * (q + q.T))
    qs = np.array(qs)
    b = rng.standard_normal(m)

    def f(x):
        return float(g0 @ x + 0.5 * x @ pmat @ x)

    def grad_f(x):
        return g0 + pmat @ x

    def c(x):
        return amat @ x + 0.5 * np.einsum("i,kij,j->k", x, qs, x) - b

    def jac(x):
        return amat + np.einsum("kij,j->ki", qs, x)

    def dc(x, xi):
        return jac(x) @ xi

    def dc_adjoint(x, y):
        return jac(x).T @ y

    def hess_lagrangian(x, lam, xi):
        return pmat @ xi - np.einsum("k,kij,j->i", lam, qs, xi)

    return ProblemInstance(
        dim_e=n,
        dim_f=m,
        f=f,
        grad_f=grad_f,
        c=c,
        dc=dc,
        dc_adjoint=dc_adjoint,
        hess_lagrangian=hess_lagrangian,
        name=f"random(n={n},m={m},seed={seed})",
        dc_matrix_fn=jac,
    )


class ValidationReport:
    def __init__(self, max_grad_error, max_adjoint_error, max_linearity_error):
        self.max_grad_error = max_grad_error
        self.max_adjoint_error = max_adjoint_error
        self.max_linearity_error = max_linearity_error

    @property
    def passed(self):
        return (self.max_grad_error <= GRAD_FD_TOL
                and self.max_adjoint_error <= ADJOINT_TOL
                and self.max_linearity_error <= LINEARITY_TOL)

    def __repr__(self):
        return ("ValidationReport(grad={:.2e}, adjoint={:.2e}, linearity={:.2e}, passed={})"
                .format(self.max_grad_error, self.max_adjoint_error,
                        self.max_linearity_error, self.passed))


def fd_step(x):
    """Central-difference step balancing truncation against round-off."""
    return _EPS ** (1.0 / 3.0) * max(1.0, np.linalg.norm(x))


def _fd_gradient_of(func, x):
    h = fd_step(x)
    out = np.zeros_like(np.asarray(x, dtype=float))
    for j in range(len(out)):
        e = np.zeros_like(out)
        e[j] = h
        out[j] = (func(x + e) - func(x - e)) / (2.0 * h)
    return out


def validate_problem(prob, trial_points, probes_per_point=4, seed=2024):
    """Check gradient, adjoint, and linearity identities at trial points.

    Returns a ValidationReport when all identities hold; raises
    ValidationFailedError naming the first broken identity otherwise.
    """
    trial_points = list(trial_points)
    if not trial_points:
        raise ValueError("need at least one trial point")
    rng = np.random.Generator(np.random.PCG64(seed))

    max_grad = 0.0
    max_adj = 0.0
    max_lin = 0.0
    failures = []
    for idx, x in enumerate(trial_points):
        x = np.asarray(x, dtype=float)
        grad = prob.grad_f(x)
        fd = _fd_gradient_of(prob.f, x)
        gerr = np.linalg.norm(fd - grad) / max(1.0, np.linalg.norm(grad))
        max_grad = max(max_grad, gerr)
        if gerr > GRAD_FD_TOL:
            failures.append(f"gradient check failed at point {idx}: error {gerr:.3e}")

        for _ in range(probes_per_point):
            xi = rng.standard_normal(prob.dim_e)
            zeta = rng.standard_normal(prob.dim_e)
            y = rng.standard_normal(prob.dim_f)
            lhs = prob.dc(x, xi) @ y
            rhs = xi @ prob.dc_adjoint(x, y)
            scale = max(1.0, abs(lhs), abs(rhs))
            aerr = abs(lhs - rhs) / scale
            max_adj = max(max_adj, aerr)
            if aerr > ADJOINT_TOL:
                failures.append(f"adjoint identity failed at point {idx}: error {aerr:.3e}")

            a, bcoef = rng.standard_normal(2)
            mix = prob.dc(x, a * xi + bcoef * zeta)
            split = a * prob.dc(x, xi) + bcoef * prob.dc(x, zeta)
            lerr = np.linalg.norm(mix - split) / max(1.0, np.linalg.norm(split))
            max_lin = max(max_lin, lerr)
            if lerr > LINEARITY_TOL:
                failures.append(f"dc linearity failed at point {idx}: error {lerr:.3e}")

    if failures:
        raise ValidationFailedError("; ".join(failures))
    return ValidationReport(max_grad, max_adj, max_lin)
