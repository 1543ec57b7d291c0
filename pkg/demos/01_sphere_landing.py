"""Landing method on the circle, step by step.

Minimize f(x) = x_1 subject to |x|^2 = 1.  The landing direction splits
into a tangent part (descends f along the current level set of the
constraint) and a normal part (pulls the iterate toward feasibility);
no retraction ever projects the iterate back onto the circle.
"""

import numpy as np

import landingopt as lo

prob = lo.make_sphere_problem(2, np.array([1.0, 0.0]))
metric = lo.EuclideanMetric()

# Look at one landing direction away from the circle.
x = np.array([2.0, 0.0])
d_t, d_n, d = lo.landing_direction(prob, metric, x, lo.IDENTITY)
print(f"at x = {x}: c(x) = {prob.c(x)[0]:.3f}")
print(f"  tangent step  {d_t}   (kills nothing here: grad is normal)")
print(f"  normal step   {d_n}   (pseudoinverse pull toward the circle)")

# Now run the full line-search solver from an infeasible start.
config = lo.LandingConfig(eta=1e-4, beta_bt=0.5, rho=0.1)
result = lo.landing_linesearch_solve(prob, metric, lo.IDENTITY, config,
                                     np.array([0.5, 1.2]))
print(f"\nstatus: {result.status} after {result.trace[-1].k} iterations")
print(f"final point {result.final_x}, f = {prob.f(result.final_x):.9f}")
print(f"final |c| = {result.trace[-1].feas:.2e}, penalty mu = {result.mu_final:.3f}")

print("\n  k        f        |c|      |grad|_g     mu    alpha  bt")
for row in result.trace:
    print(f"{row.k:3d} {row.f:+9.5f} {row.feas:9.2e} {row.grad_norm_g:9.2e}"
          f" {row.mu:8.3f} {row.alpha:6.3f} {row.backtracks:3d}")

# Every accepted step satisfied the Armijo inequality on the l2 merit
# function, and the directional derivative obeyed the sufficient-decrease
# certificate; both were checked inside the loop and are kept here:
worst = max(d.dphi - d.decrease_bound for d in result.diagnostics)
print(f"\nworst certificate slack along the run: {worst:.2e} (must be <= 1e-9)")
