"""Brockett cost on the Stiefel manifold: three metrics, one landing loop.

Minimize f(X) = trace(X^T A X N) / 2 over X^T X = I with N = diag(p..1);
the minimizer spans the eigenvectors of the p smallest eigenvalues of A,
so a dense eigendecomposition gives the exact optimal value to compare
against.  The closed-form Stiefel steps (canonical and beta metrics) run
through the same solver loop as the generic Euclidean machinery.
"""

import numpy as np

import landingopt as lo

n, p, seed = 20, 3, 7
prob = lo.make_stiefel_problem("brockett", n, p, seed)

# exact optimum from the eigendecomposition oracle
lam = np.sort(np.linalg.eigvalsh(prob.extras["a"]))
f_star = 0.5 * float(prob.extras["weights"] @ lam[:p])
print(f"eigendecomposition optimum: f* = {f_star:.9f}")

rng = np.random.Generator(np.random.PCG64(8))
x0 = prob.vec(np.linalg.qr(rng.standard_normal((n, p)))[0])
config = lo.LandingConfig(rho=0.1, max_iter=4000)

for label, metric, h in [
        ("euclidean + gram normal", lo.EuclideanMetric(), lo.GRAM_EUCLID),
        ("canonical metric", lo.stiefel_canonical_metric(), lo.IDENTITY),
        ("beta metric (beta=0.5)", lo.stiefel_beta_metric(0.5), lo.IDENTITY),
]:
    result = lo.landing_linesearch_solve(prob, metric, h, config, x0)
    last = result.trace[-1]
    print(f"{label:26s} {result.status:10s} iters={last.k:5d} "
          f"f-f*={last.f - f_star:+.2e} |c|={last.feas:.1e}")

# The closed forms behind the canonical run: at any full-rank X the
# generic dense machinery and the matrix formulas agree.
from landingopt import stiefel

xm = prob.mat(x0) + 0.3 * rng.standard_normal((n, p))
x = prob.vec(xm)
gm = prob.mat(prob.grad_f(x))
d_t_closed, d_n_closed = stiefel.canonical_steps(xm, gm)
met = lo.stiefel_canonical_metric()
d_t_generic = prob.mat(lo.tangent_step(prob, met, x))
d_n_generic = prob.mat(lo.normal_step_gradient(prob, met, x))
print("\nclosed form vs generic (canonical):",
      f"tangent dev {np.linalg.norm(d_t_closed - d_t_generic):.2e},",
      f"normal dev {np.linalg.norm(d_n_closed - d_n_generic):.2e}")
