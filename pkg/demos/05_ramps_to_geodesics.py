"""Ramps on products with a circle factor flow to closed geodesics."""

from geoflow.flow import FlowSettings
from geoflow.generators import sphere_lift, torus_winding
from geoflow.manifold import Circle, Product, SpaceForm
from geoflow.ramp import find_geodesic, monitor_mu, straight_winding_deviation

# %% a wobbly (1, 3) winding on the flat torus straightens out
torus = Product(Circle(1.0), 1.0)
found = find_geodesic(torus, torus_winding(64, 1, 3, amp=0.1, mode=2), FlowSettings(t_max=100.0))
print("torus:", "converged" if found.converged else "not converged", "winding", found.winding)
print(f"  sup |DT/ds| {found.sup_D1:.2e}, distance to straight winding "
      f"{straight_winding_deviation(found.curve, torus):.2e}")
rep = monitor_mu(found.ramp_trace)
print(f"  minimum height monotone: {rep.passed}, always a ramp: {rep.always_ramp}")

# %% on S^2 x S^1 the limit is a great circle times a fiber turn
prod = Product(SpaceForm(2, 1), 0.5)
found = find_geodesic(prod, sphere_lift(64, 1, amp=0.1, mode=2), FlowSettings(t_max=100.0))
print(f"S^2 x S^1: length {found.flow.trace[-1].L:.6f}, fiber length {2 * 3.141592653589793 * prod.rho:.6f}")
