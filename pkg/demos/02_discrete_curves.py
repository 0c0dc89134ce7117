"""Discrete curves: arclength, curvature, Frenet frames and resampling."""

import math

import numpy as np

from geoflow.curve import frenet, geometry, resample_arclength
from geoflow.generators import clifford_helix, ellipse, helix
from geoflow.manifold import Euclidean, SpaceForm

# %% an ellipse with semi-axes 2 and 1: curvature 2 at the ends of the major axis
g = geometry(ellipse(512), Euclidean(2))
print(f"length {g.length:.10f}  (Ramanujan estimate {math.pi * (3 * 3 - math.sqrt(7 * 5)):.10f})")
print(f"max curvature {g.k.max():.6f}, min curvature {g.k.min():.6f}")

# %% a round helix in R^3 has k = a / (a^2 + b^2) and tau = b / (a^2 + b^2)
g = geometry(helix(256, a=1.0, b=0.5), Euclidean(3))
_, _, tau = frenet(g)
print(f"helix k {np.median(g.k):.6f} (exact 0.8), tau {np.median(tau):.6f} (exact 0.4)")

# %% curvature estimates converge at second order
S3 = SpaceForm(3, 1)
for N in (64, 128, 256):
    k = geometry(clifford_helix(N, 1, 2, 0.5), S3).k
    print(f"N = {N:4d}: curvature ripple on a Clifford helix {k.max() - k.min():.3e}")

# %% resampling to uniform arclength keeps the shape
c = ellipse(256)
r = resample_arclength(c, Euclidean(2))
gr = geometry(r, Euclidean(2))
print(f"spacing spread after resampling {(gr.ds.max() - gr.ds.min()) / gr.ds.mean():.2e}")
