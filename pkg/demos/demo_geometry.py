"""Tour of the sphere primitives: distances, exp/log maps, curves.

Run: python3 demos/demo_geometry.py
"""

import numpy as np

from locfrechet import (
    ManifoldCurve,
    SpherePoint,
    TangentVector,
    TimeGrid,
    curve_distance,
    exp_map,
    geodesic_distance,
    log_map,
    project_to_tangent,
)

north = SpherePoint([0.0, 0.0, 1.0])
east = SpherePoint([1.0, 0.0, 0.0])

print("geodesic distance north->east:", geodesic_distance(north, east), "(pi/2 =", np.pi / 2, ")")

v = log_map(north, east)
print("log_north(east) =", v.vec, " norm =", v.norm)
print("exp back:", exp_map(v).coords)

# walking a quarter turn along a great circle
quarter = TangentVector(north, [np.pi / 2, 0.0, 0.0])
print("exp_north(pi/2 * e_x) =", exp_map(quarter).coords)

# repairing a vector that drifted off the tangent plane
w = project_to_tangent(north, [0.3, -0.2, 5.0])
print("projected tangent vector:", w.vec)

# two constant curves a quarter turn apart
grid = TimeGrid.regular(50)
a = ManifoldCurve.constant(grid, north.coords)
b = ManifoldCurve.constant(grid, east.coords)
print("sup curve distance:", curve_distance(a, b))

# a seeded random curve pair and its supremum distance
rng = np.random.default_rng(0)
pts1 = rng.standard_normal((50, 3))
pts1 /= np.linalg.norm(pts1, axis=1, keepdims=True)
x = ManifoldCurve(grid, pts1)
print("sup distance random vs north:", curve_distance(x, a))
