"""Curvature and torsion of helices in space forms, reduced to an ODE."""

import math

from geoflow.spaceform_ode import HelixState, hyperbolic_limit_tau, integrate, sphere_limit_sqrt_v

# %% in H^3 the curvature dies out and the torsion settles at the golden ratio
traj = integrate(HelixState(1.0, 1.0, -1), 10.0)
end = traj.final()
print(f"H^3: k^2 = {end.u:.3e}, tau = {end.tau:.12f}, closed form {hyperbolic_limit_tau(1.0):.12f}")

# %% in S^3 the torsion squared tends to the root of the orbit equation
traj = integrate(HelixState(1.0, 1.0, 1), 10.0)
print(f"S^3: sqrt(v) = {math.sqrt(traj.v[-1]):.12f}, closed form {sphere_limit_sqrt_v(1.0):.12f}")

# %% flat space without torsion: k = (1 - 2t)^(-1/2) blows up at t = 1/2
traj = integrate(HelixState(1.0, 0.0, 0), 1.0)
print(f"R^3: blow-up detected at t = {traj.blowup_t:.4f}")
