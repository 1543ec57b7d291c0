"""The landing direction as a chameleon: SQP and augmented Lagrangian.

Two classics drop out of the landing iteration for suitable metrics:

* the basic SQP direction equals tangent step + pseudoinverse normal
  step in the metric whose tangent restriction is B and whose normal
  space is the orthogonal complement of B applied to the tangent space;
* a gradient step on the augmented Lagrangian with least-squares
  multipliers is exactly minus the landing direction whose normal
  operator is beta * Dc Dc*^g.

The equivalence suite sweeps these identities over random instances;
here we also spell one SQP case out by hand.
"""

import numpy as np

import landingopt as lo
from landingopt import metrics

prob = lo.make_random_problem(9, 3, seed=42)
rng = np.random.Generator(np.random.PCG64(0))
x = rng.standard_normal(9)

# hand-built SQP comparison: random SPD B
a = rng.standard_normal((9, 9))
b_mat = a @ a.T + 0.5 * np.eye(9)
d_sqp, lam = lo.sqp_direction(prob, x, b_mat)

jac = lo.dc_matrix(prob, x)
tangent_basis, _ = metrics.constraint_bases(jac)
w = b_mat @ tangent_basis
u_full, _, _ = np.linalg.svd(w, full_matrices=True)
normal_basis = u_full[:, tangent_basis.shape[1]:]   # (B T)^perp


def projector(prob_, x_, v):
    coeffs = np.linalg.solve(np.hstack([tangent_basis, normal_basis]), v)
    return tangent_basis @ coeffs[:tangent_basis.shape[1]]


metric = lo.ConstructedMetric(projector,
                              lambda p_, x_, v: b_mat @ v,
                              lambda p_, x_, v: v, label="sqp-induced")
d_t = lo.tangent_step(prob, metric, x)
d_n = lo.normal_step_pseudoinverse(prob, metric, x, lo.IDENTITY)
print("SQP vs landing deviation:",
      f"{np.linalg.norm(d_sqp - (d_t + d_n)):.3e}")

# augmented Lagrangian: gradient equals minus the landing direction
beta_pen = 1.7
alm = lo.augmented_lagrangian_gradient(prob, lo.EuclideanMetric(), x, beta_pen)
d_t = lo.tangent_step(prob, lo.EuclideanMetric(), x)
d_n = beta_pen * lo.normal_step_gradient(prob, lo.EuclideanMetric(), x)
print("ALM gradient vs -landing:",
      f"{np.linalg.norm(alm + d_t + d_n):.3e}")

# and the full randomized sweep
report = lo.equivalence_suite(seed=0, size_profile="medium", n_instances=50)
print()
print(report.table())
