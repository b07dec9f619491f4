"""Weighted Frechet means, including the signed-weight branch.

Run: python3 demos/demo_frechet_means.py
"""

import numpy as np

from locfrechet import ManifoldCurve, TimeGrid, WeightedPointSet, frechet_curve_mean, weighted_frechet_mean
from locfrechet.frechet import frechet_objective

rng = np.random.default_rng(1)

# points in a polar cap with positive weights
pts = np.array([0, 0, 2.0]) + 0.4 * rng.standard_normal((8, 3))
pts /= np.linalg.norm(pts, axis=1, keepdims=True)
w = rng.uniform(0.2, 1.0, 8)
mean = weighted_frechet_mean(WeightedPointSet(pts, w))
print("positive-weight mean:", mean.coords)
print("objective at mean  :", frechet_objective(mean.coords, pts, w))

# flipping two weights negative: the objective becomes non-convex and
# the solver adds an icosphere-seeded restart
w_signed = w.copy()
w_signed[:2] *= -0.8
mean_s = weighted_frechet_mean(WeightedPointSet(pts, w_signed))
print("signed-weight mean :", mean_s.coords)
print("objective at mean  :", frechet_objective(mean_s.coords, pts, w_signed))

# node-wise mean of a small bundle of curves
grid = TimeGrid.regular(40)
curves = []
for _ in range(10):
    raw = np.array([0, 0, 2.0]) + 0.5 * rng.standard_normal((40, 3))
    curves.append(ManifoldCurve(grid, raw / np.linalg.norm(raw, axis=1, keepdims=True)))
mu = frechet_curve_mean(curves)
print("curve mean first node:", mu.points[0], " last node:", mu.points[-1])
