"""Metric models: metrics, Christoffel symbols and curvature in charts."""

import numpy as np

from geoflow.manifold import Product, SpaceForm, christoffel, estimate_lambda, metric_at, sectional

# %% the Poincare ball is four times the Euclidean metric at its centre
ball = SpaceForm(3, -1)
print("ball metric at 0:\n", metric_at(ball, np.zeros(3)))
print("Christoffel symbols vanish there:", not np.any(christoffel(ball, np.zeros(3))))

# %% sectional curvature is constant on a space form, whatever the plane
rng = np.random.default_rng(0)
for K in (1, -1):
    model = SpaceForm(3, K)
    x = model.sample_points(5, rng)
    X, Y = rng.normal(size=(2,) + x.shape)
    print(f"K = {K:+d}: sampled sectional curvatures", np.round(sectional(model, x, X, Y), 12))

# %% on S^2 x S^1 only planes tangent to the sphere factor are curved
prod = Product(SpaceForm(2, 1), 0.5)
p = np.array([0.3, 0.1, 2.0])
print("sphere plane:", sectional(prod, p, [1, 0, 0], [0, 1, 0]))
print("mixed plane: ", sectional(prod, p, [1, 0, 0], [0, 0, 1]))

# %% the curvature operator bound used by the short-time window
print("declared bound:", prod.lambda_bound, " sampled:", round(estimate_lambda(prod, n_frames=500, safety=1.0, seed=1), 6))
