"""Curve shortening flow: shrinking circles, the length law and a great circle."""

import math

import numpy as np

from geoflow.flow import bernstein_monitor, run
from geoflow.generators import circle, ellipse, perturbed_circle
from geoflow.manifold import Euclidean, SpaceForm

E2, S3 = Euclidean(2), SpaceForm(3, 1)

# %% a round circle shrinks as r(t) = sqrt(1 - 2t)
res = run(E2, circle(256), t_max=0.375)
r = np.linalg.norm(res.state.curve.nodes, axis=1)
print(f"radius at t = 0.375: {r.mean():.6f}, exact 0.5")

# %% the length decreases at rate -int k^2 ds; the trace records the residual
res = run(E2, ellipse(256), max_steps=500)
print("largest length-law residual:", max(d.residual1 for d in res.trace[1:]))
print(f"length {res.trace[0].L:.6f} -> {res.trace[-1].L:.6f}")

# %% great circles of S^3 are geodesics and stop at once
res = run(S3, circle(512, dim=3))
print("great circle:", res.report.reason, "after", res.state.step, "steps")

# %% short-time curvature bounds on a perturbed circle of S^3
res = run(S3, perturbed_circle(256, 0.1, 3, dim=3), t_max=0.1)
rep = bernstein_monitor(res.trace, S3)
print(f"window {rep.window:.4f}, max M/(2 M0) {rep.ratio1:.3f}, passed {rep.passed}")

# %% a shrinking circle becomes singular near t = 1/2
res = run(E2, circle(64), t_max=1.0)
print(f"circle: {res.report.reason} at t = {res.state.t:.4f} (exact {0.5})")
assert math.isclose(res.state.t, 0.5, abs_tol=5e-3)
