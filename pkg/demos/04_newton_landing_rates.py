"""Quadratic convergence needs the right normal space.

The Newton-type landing step pairs a Riemannian-Newton tangent step with
a pseudoinverse feasibility step.  Quadratic convergence only appears
when the normal space is the Euclidean orthogonal complement of the
Lagrangian Hessian applied to the tangent space; swapping in the plain
Euclidean normal space degrades the rate to an alternating two-step
contraction.

The instance is a quadratic-plus-linear cost on the circle.  (A pure
quadratic would hide the effect: its constrained minimizers are
eigenvectors, where the two normal spaces coincide.)
"""

import numpy as np
from scipy.optimize import brentq

import landingopt as lo
from landingopt.problems import ProblemInstance

a_diag = np.array([1.0, 1.05])
b = np.array([0.3, 0.2])
a = np.diag(a_diag)

prob = ProblemInstance(
    dim_e=2, dim_f=1,
    f=lambda x: 0.5 * x @ a @ x + b @ x,
    grad_f=lambda x: a @ x + b,
    c=lambda x: np.array([0.5 * (x @ x - 1.0)]),
    dc=lambda x, xi: np.array([x @ xi]),
    dc_adjoint=lambda x, y: y[0] * x,
    hess_lagrangian=lambda x, lam, xi: a @ xi - lam[0] * xi,
    name="sphere-quadratic")

# reference minimizer: secular equation + Newton polish on the KKT system
lam0 = brentq(lambda t: np.linalg.solve(a - t * np.eye(2), -b)
              @ np.linalg.solve(a - t * np.eye(2), -b) - 1.0,
              -500.0, a_diag.min() - 1e-9)
z = np.concatenate([np.linalg.solve(a - lam0 * np.eye(2), -b), [lam0]])
for _ in range(60):
    x, lam = z[:2], z[2]
    res = np.concatenate([a @ x + b - lam * x, [0.5 * (x @ x - 1.0)]])
    jac = np.vstack([np.hstack([a - lam * np.eye(2), -x.reshape(-1, 1)]),
                     np.hstack([x, [0.0]]).reshape(1, -1)])
    z = z - np.linalg.solve(jac, res)
xstar = z[:2]
print(f"minimizer x* = {xstar}, f* = {prob.f(xstar):.9f}")

x0 = xstar + 1e-2 * np.array([np.cos(np.deg2rad(120.0)),
                              np.sin(np.deg2rad(120.0))])

for normal_space in ("lagrangian", "euclidean"):
    x = x0.copy()
    errors = []
    for _ in range(12):
        e = float(np.linalg.norm(x - xstar))
        errors.append(e)
        if e <= 1e-14:
            break
        x = x + lo.newton_landing_step(prob, x, normal_space=normal_space)
    fit = lo.estimate_order(errors)
    shown = "  ".join(f"{e:.2e}" for e in errors[:6])
    print(f"\n{normal_space:10s} normal space: errors {shown}")
    print(f"           fitted order {fit.fitted_order:.2f} "
          f"(residual {fit.fit_residual:.2f})")
