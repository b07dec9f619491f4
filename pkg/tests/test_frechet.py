import numpy as np
import pytest

from locfrechet.errors import DegenerateWeightsError
from locfrechet.frechet import (
    SolverOptions,
    WeightedPointSet,
    frechet_curve_mean,
    frechet_objective,
    icosphere,
    weighted_frechet_mean,
)
from locfrechet.geometry import ManifoldCurve, TimeGrid, dist_arr, exp_arr, log_arr
from locfrechet.simulation import SimulationConfig, generate_dataset

from conftest import cap_points, chord_distance, random_unit


def grid_refine_oracle(points, weights, level=6, rounds=12):
    """Brute-force minimizer: icosphere scan plus an independent local
    tangent-grid refinement (no gradient descent involved)."""
    grid = icosphere(level)
    d = np.arccos(np.clip(grid @ points.T, -1.0, 1.0))
    f = (d * d) @ weights
    best = grid[int(np.argmin(f))]
    span = 2.5 * 1.11 / 2**level
    helper = np.array([0.412, 0.817, 0.403])
    for _ in range(rounds):
        e1 = np.cross(best, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(best, e1)
        a = np.linspace(-span, span, 9)
        cand = best[None, None, :] + a[:, None, None] * e1 + a[None, :, None] * e2
        cand = (cand / np.linalg.norm(cand, axis=2, keepdims=True)).reshape(-1, 3)
        d = np.arccos(np.clip(cand @ points.T, -1.0, 1.0))
        f = (d * d) @ weights
        best = cand[int(np.argmin(f))]
        span *= 0.35
    return best


def test_icosphere_sizes():
    assert icosphere(0).shape == (12, 3)
    assert icosphere(4).shape == (2562, 3)
    assert np.allclose(np.linalg.norm(icosphere(3), axis=1), 1.0, atol=1e-12)


def test_single_point_identity():
    p = np.array([0.0, 0.6, 0.8])
    m = weighted_frechet_mean(WeightedPointSet(p[None, :], [1.0]))
    assert chord_distance(m.coords, p) <= 1e-12


def test_two_point_midpoint():
    p, q = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    m = weighted_frechet_mean(WeightedPointSet(np.stack([p, q]), [1.0, 1.0]))
    mid = exp_arr(p, 0.5 * log_arr(p, q))
    assert chord_distance(m.coords, mid) <= 1e-9


def test_degenerate_weights_raise():
    pts = np.array([[0, 0, 1.0], [1, 0, 0.0]])
    with pytest.raises(DegenerateWeightsError):
        weighted_frechet_mean(WeightedPointSet(pts, [0.0, 1e-16]))


def test_positive_weight_instances_match_oracle(rng):
    for _ in range(25):
        center = random_unit(rng)
        pts = cap_points(rng, 7, center, 0.5)
        w = rng.uniform(0.05, 1.0, 7)
        sol = weighted_frechet_mean(WeightedPointSet(pts, w)).coords
        assert dist_arr(sol, grid_refine_oracle(pts, w)) <= 2e-3


def test_signed_weight_instances_match_oracle(rng):
    for _ in range(25):
        center = random_unit(rng)
        pts = cap_points(rng, 7, center, 0.5)
        w = rng.uniform(-0.4, 1.0, 7)
        if np.sum(np.abs(w)) < 1e-6:
            continue
        sol = weighted_frechet_mean(WeightedPointSet(pts, w)).coords
        orc = grid_refine_oracle(pts, w)
        # positions agree, or the solver found a strictly better value
        ok = dist_arr(sol, orc) <= 2e-3 or frechet_objective(
            sol, pts, w
        ) < frechet_objective(orc, pts, w)
        assert ok


def test_objective_certificate(rng):
    pts = cap_points(rng, 9, np.array([0.2, -0.4, 0.89]) / np.linalg.norm([0.2, -0.4, 0.89]), 0.4)
    w = rng.uniform(0.1, 1.0, 9)
    sol = weighted_frechet_mean(WeightedPointSet(pts, w)).coords
    f0 = frechet_objective(sol, pts, w)
    for _ in range(100):
        u = rng.standard_normal(3)
        u -= (sol @ u) * sol
        u *= 1e-3 / np.linalg.norm(u)
        assert f0 <= frechet_objective(exp_arr(sol, u), pts, w) + 1e-8


def test_weight_scaling_invariance(rng):
    pts = cap_points(rng, 6, np.array([0.0, 0.0, 1.0]), 0.5)
    w = rng.uniform(0.1, 1.0, 6)
    a = weighted_frechet_mean(WeightedPointSet(pts, w)).coords
    b = weighted_frechet_mean(WeightedPointSet(pts, 7.3 * w)).coords
    assert chord_distance(a, b) <= 1e-8


def test_permutation_invariance(rng):
    pts = cap_points(rng, 8, np.array([0.0, 0.0, 1.0]), 0.6)
    w = rng.uniform(0.1, 1.0, 8)
    a = weighted_frechet_mean(WeightedPointSet(pts, w)).coords
    perm = rng.permutation(8)
    b = weighted_frechet_mean(WeightedPointSet(pts[perm], w[perm])).coords
    assert chord_distance(a, b) < 1e-10


def test_gradient_norm_certificate(rng):
    pts = cap_points(rng, 10, np.array([0.0, 1.0, 0.0]), 0.5)
    w = rng.uniform(0.2, 1.0, 10)
    sol = weighted_frechet_mean(WeightedPointSet(pts, w)).coords
    logs = log_arr(sol[None, :], pts)
    grad = 2.0 * np.linalg.norm(w @ logs) / np.sum(np.abs(w))
    assert grad <= 1e-8


def test_curve_mean_identity_and_symmetry(rng):
    grid = TimeGrid.regular(12)
    pts = cap_points(rng, 12, np.array([1.0, 0.0, 0.0]), 0.3)
    curve = ManifoldCurve(grid, pts)
    m = frechet_curve_mean([curve, curve, curve])
    # identity is certified only up to the arccos resolution floor
    assert np.max(chord_distance(m.points, curve.points)) <= 5e-8

    # mirror-symmetric pair across z=0, both orbits in the eastern
    # hemisphere: the mean must sit on the equator z=0
    theta = np.linspace(0.2, 0.9, 15)
    up = np.column_stack([np.cos(theta), np.sin(theta) * 0.0 + 0.3, np.sin(theta)])
    up /= np.linalg.norm(up, axis=1, keepdims=True)
    dn = up * np.array([1.0, 1.0, -1.0])
    g = TimeGrid.regular(15)
    m = frechet_curve_mean([ManifoldCurve(g, up), ManifoldCurve(g, dn)])
    assert np.max(np.abs(m.points[:, 2])) <= 1e-8


def localized_grid_oracle(points, n_side=200, rounds=8):
    """Reduced-density version of a dense localized uniform grid search
    with refinement: a tangent-plane grid over the sample's bounding
    cap inflated by 10%."""
    center = points.mean(axis=0)
    center /= np.linalg.norm(center)
    radius = 1.1 * float(np.max(np.arccos(np.clip(points @ center, -1, 1)))) + 1e-6
    best, span = center, radius
    helper = np.array([0.23, -0.52, 0.82])
    for _ in range(rounds):
        e1 = np.cross(best, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(best, e1)
        a = np.linspace(-span, span, n_side)
        cand = best[None, None, :] + a[:, None, None] * e1 + a[None, :, None] * e2
        cand = (cand / np.linalg.norm(cand, axis=2, keepdims=True)).reshape(-1, 3)
        d = np.arccos(np.clip(cand @ points.T, -1.0, 1.0))
        f = (d * d).sum(axis=1)
        best = cand[int(np.argmin(f))]
        span *= 2.5 / n_side * 4
    return best


def test_curve_mean_matches_localized_grid_oracle():
    sample = generate_dataset(SimulationConfig(n=10, n_nodes=8, seed=42, K_gen=2))
    mean = frechet_curve_mean(sample.regressors)
    stack = sample.regressor_array
    for j in range(8):
        oracle = localized_grid_oracle(stack[:, j, :])
        assert dist_arr(mean.points[j], oracle) <= 1e-3
