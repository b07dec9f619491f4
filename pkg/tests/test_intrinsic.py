import numpy as np
import pytest
from scipy.integrate import quad

from locfrechet.errors import (
    AllNodesFailedError,
    DegenerateWindowError,
    EmptyWindowError,
    GridMismatchError,
)
from locfrechet.frechet import WeightedPointSet, weighted_frechet_mean
from locfrechet.geometry import ManifoldCurve, TimeGrid, dist_arr, exp_arr
from locfrechet.intrinsic import (
    GeodesicKernel,
    geodesic_kernel,
    ll_predict_node,
    ll_weights_node,
    nw_predict_node,
    predict_curve,
)
from locfrechet.simulation import BivariateCurveSample, SimulationConfig, generate_dataset

from conftest import cap_points, chord_distance, random_unit
from test_frechet import grid_refine_oracle

NORTH = np.array([0.0, 0.0, 1.0])


def test_kernel_peak_and_edge():
    k = GeodesicKernel(0.4)
    assert geodesic_kernel(0.0, k) == pytest.approx(3.0 / (4.0 * 0.4), abs=0)
    assert geodesic_kernel(0.4, k) == 0.0
    assert geodesic_kernel(1.0, k) == 0.0
    with pytest.raises(ValueError):
        GeodesicKernel(0.0)
    with pytest.raises(ValueError):
        GeodesicKernel(3.5)


def test_kernel_moments_finite_on_sphere():
    # integral over the sphere of K(d) d^j against the surface measure
    # 2 pi sin(theta) d theta, evaluated at two quadrature resolutions
    k = GeodesicKernel(0.7)
    for j in range(3):
        coarse, _ = quad(
            lambda th: 2 * np.pi * np.sin(th) * geodesic_kernel(th, k) * th**j,
            0.0,
            k.bandwidth,
            limit=200,
        )
        assert np.isfinite(coarse)
        fine = 0.0
        ths = np.linspace(0, k.bandwidth, 20001)
        vals = 2 * np.pi * np.sin(ths) * geodesic_kernel(ths, k) * ths**j
        fine = np.trapezoid(vals, ths)
        assert coarse == pytest.approx(fine, rel=1e-5)


def test_nw_constant_response(rng):
    X = cap_points(rng, 8, NORTH, 0.3)
    ystar = np.array([0.3, 0.1, 1.0]) / np.linalg.norm([0.3, 0.1, 1.0])
    Y = np.tile(ystar, (8, 1))
    out = nw_predict_node(X, Y, X[0], GeodesicKernel(0.5))
    assert chord_distance(out.coords, ystar) <= 5e-8


def test_nw_single_sample_window(rng):
    X = np.stack([NORTH, [1.0, 0, 0], [0, 1.0, 0]])
    Y = cap_points(rng, 3, NORTH, 0.2)
    out = nw_predict_node(X, Y, NORTH, GeodesicKernel(0.2))
    # certified only up to the arccos resolution floor
    assert chord_distance(out.coords, Y[0]) <= 5e-8


def test_nw_empty_window():
    X = np.stack([[1.0, 0, 0], [0, 1.0, 0]])
    Y = np.stack([NORTH, NORTH])
    with pytest.raises(EmptyWindowError):
        nw_predict_node(X, Y, NORTH, GeodesicKernel(0.3))


def test_nw_matches_grid_oracle(rng):
    X = cap_points(rng, 5, NORTH, 0.4)
    Y = cap_points(rng, 5, NORTH, 0.4)
    k = GeodesicKernel(0.8)
    w = geodesic_kernel(dist_arr(X, NORTH), k)
    assert np.count_nonzero(w) >= 2
    out = nw_predict_node(X, Y, NORTH, k)
    oracle = grid_refine_oracle(Y[w > 0], w[w > 0])
    assert dist_arr(out.coords, oracle) <= 2e-3


def test_ll_weights_hand_instance():
    # d = (0.2, 0.6), bw = 1: K = (0.72, 0.48), mu0 = 0.6,
    # mu1 = 0.216, mu2 = 0.1008, sigma0^2 = 0.013824, s = (3, -1)
    x = NORTH
    X = np.stack([exp_arr(x, 0.2 * np.array([1.0, 0, 0])), exp_arr(x, 0.6 * np.array([1.0, 0, 0]))])
    lw = ll_weights_node(X, x, GeodesicKernel(1.0))
    assert lw.mu0 == pytest.approx(0.6, abs=1e-12)
    assert lw.mu1 == pytest.approx(0.216, abs=1e-12)
    assert lw.mu2 == pytest.approx(0.1008, abs=1e-12)
    assert lw.sigma0sq == pytest.approx(0.013824, abs=1e-12)
    assert lw.s[0] == pytest.approx(3.0, abs=1e-9)
    assert lw.s[1] == pytest.approx(-1.0, abs=1e-9)
    assert np.mean(lw.s) == pytest.approx(1.0, abs=1e-10)
    assert lw.s.min() < 0  # negative local linear weight exhibited


def test_ll_weights_zero_spread_degenerate():
    X = np.tile(NORTH, (5, 1))
    with pytest.raises(DegenerateWindowError):
        ll_weights_node(X, NORTH, GeodesicKernel(0.5))


def test_ll_weight_sum_identity_random(rng):
    kern = GeodesicKernel(0.6)
    checked = 0
    while checked < 200:
        n = int(rng.integers(3, 40))
        X = cap_points(rng, n, random_unit(rng), 0.5)
        x = X[int(rng.integers(n))]
        try:
            lw = ll_weights_node(X, x, kern)
        except (EmptyWindowError, DegenerateWindowError):
            continue
        inside = geodesic_kernel(dist_arr(X, x), kern) > 0
        assert abs(np.mean(lw.s[inside]) - 1.0) <= 1e-10
        assert abs(lw.sigma0sq - (lw.mu0 * lw.mu2 - lw.mu1**2)) <= 1e-12
        checked += 1


def test_ll_predict_constant_response(rng):
    X = cap_points(rng, 10, NORTH, 0.4)
    ystar = random_unit(rng)
    Y = np.tile(ystar, (10, 1))
    out = ll_predict_node(X, Y, NORTH, GeodesicKernel(0.9))
    assert chord_distance(out.coords, ystar) <= 5e-8


def test_ll_predict_matches_grid_oracle():
    rng = np.random.default_rng(77)
    kern = GeodesicKernel(1.0)
    x = NORTH
    X = np.stack([exp_arr(x, 0.2 * np.array([1.0, 0, 0])), exp_arr(x, 0.6 * np.array([1.0, 0, 0]))])
    Y = cap_points(rng, 2, NORTH, 0.5)
    lw = ll_weights_node(X, x, kern)
    out = ll_predict_node(X, Y, x, kern)
    oracle = grid_refine_oracle(Y, lw.s)
    assert dist_arr(out.coords, oracle) <= 2e-3


def test_ll_locality_deletion_bit_for_bit(rng):
    kern = GeodesicKernel(0.5)
    X = cap_points(rng, 20, NORTH, 0.6)
    Y = cap_points(rng, 20, NORTH, 0.4)
    d = dist_arr(X, NORTH)
    inside = d < kern.bandwidth
    assert 2 <= inside.sum() < 20
    full = ll_predict_node(X, Y, NORTH, kern)
    kept = ll_predict_node(X[inside], Y[inside], NORTH, kern)
    assert np.array_equal(full.coords, kept.coords)
    nw_full = nw_predict_node(X, Y, NORTH, kern)
    nw_kept = nw_predict_node(X[inside], Y[inside], NORTH, kern)
    assert np.array_equal(nw_full.coords, nw_kept.coords)


def _sample_from_arrays(grid, X, Y):
    return BivariateCurveSample(
        grid,
        [ManifoldCurve(grid, x) for x in X],
        [ManifoldCurve(grid, y) for y in Y],
        np.arange(X.shape[0]),
    )


def test_predict_curve_constant_sample(rng):
    grid = TimeGrid.regular(15)
    X = np.stack([np.tile(p, (15, 1)) for p in cap_points(rng, 6, NORTH, 0.3)])
    ystar = random_unit(rng)
    Y = np.tile(ystar, (6, 15, 1))
    sample = _sample_from_arrays(grid, X, Y)
    x0 = sample.regressors[2]
    pred = predict_curve("NW", sample, x0, GeodesicKernel(0.8))
    assert all(s == "ok" for s in pred.statuses)
    assert np.max(chord_distance(pred.curve.points, Y[0])) <= 5e-8


def test_predict_curve_full_support_equals_global_mean(rng):
    grid = TimeGrid.regular(6)
    X = np.stack([cap_points(rng, 6, NORTH, 0.5) for _ in range(7)])
    Y = np.stack([cap_points(rng, 6, NORTH, 0.5) for _ in range(7)])
    sample = _sample_from_arrays(grid, X, Y)
    kern = GeodesicKernel(np.pi)
    pred = predict_curve("NW", sample, sample.regressors[0], kern)
    assert all(s == "ok" for s in pred.statuses)
    Xs, Ys = sample.regressor_array, sample.response_array
    for j in range(6):
        w = geodesic_kernel(dist_arr(Xs[:, j, :], Xs[0, j, :]), kern)
        ref = weighted_frechet_mean(WeightedPointSet(Ys[:, j, :], w))
        assert chord_distance(pred.curve.points[j], ref.coords) <= 1e-15


def test_predict_curve_matches_node_loop(rng):
    sample = generate_dataset(SimulationConfig(n=12, n_nodes=30, seed=3, K_gen=2))
    kern = GeodesicKernel(0.6)
    x0 = sample.regressors[4]
    pred = predict_curve("LL", sample, x0, kern)
    X, Y = sample.regressor_array, sample.response_array
    for j in range(30):
        try:
            ref = ll_predict_node(X[:, j, :], Y[:, j, :], x0.points[j], kern)
        except (EmptyWindowError, DegenerateWindowError):
            assert pred.statuses[j] == "interpolated"
            continue
        assert pred.statuses[j] == "ok"
        # the curve constructor renormalizes, shifting the last ulp
        assert chord_distance(pred.curve.points[j], ref.coords) <= 1e-15


def test_predict_curve_interpolates_failed_nodes(rng):
    grid = TimeGrid.regular(9)
    # regressors coincide at interior nodes -> degenerate LL windows
    base_pts = cap_points(rng, 4, NORTH, 0.4)
    X = np.stack([np.tile(p, (9, 1)) for p in base_pts])
    X[:, 4, :] = NORTH  # all regressors identical at node 4
    Y = np.stack([np.tile(p, (9, 1)) for p in cap_points(rng, 4, NORTH, 0.3)])
    sample = _sample_from_arrays(grid, X, Y)
    pred = predict_curve("LL", sample, sample.regressors[0], GeodesicKernel(1.2))
    assert pred.statuses[4] == "interpolated"
    assert pred.n_interpolated >= 1
    # interpolation keeps the node on the sphere
    assert abs(np.linalg.norm(pred.curve.points[4]) - 1.0) <= 1e-12


def test_predict_curve_all_nodes_failed(rng):
    grid = TimeGrid.regular(4)
    X = np.stack([np.tile(NORTH, (4, 1)) for _ in range(5)])
    Y = np.stack([np.tile(p, (4, 1)) for p in cap_points(rng, 5, NORTH, 0.3)])
    sample = _sample_from_arrays(grid, X, Y)
    with pytest.raises(AllNodesFailedError):
        predict_curve("LL", sample, sample.regressors[0], GeodesicKernel(0.5))


def test_predict_curve_grid_mismatch(rng):
    sample = generate_dataset(SimulationConfig(n=5, n_nodes=20, seed=1, K_gen=2))
    other = ManifoldCurve.constant(TimeGrid.regular(21), NORTH)
    with pytest.raises(GridMismatchError):
        predict_curve("NW", sample, other, GeodesicKernel(0.5))


def test_moment_ratio_stabilizes_as_bandwidth_shrinks():
    # kernel-weighted distance moments on a uniformly sampled cap: the
    # scale-free ratio mu2 mu0 / mu1^2 settles as the support shrinks
    rng = np.random.default_rng(12)
    n = 10_000
    # uniform sample on a cap of radius 0.2 around the north pole
    cos_r = np.cos(0.2)
    z = rng.uniform(cos_r, 1.0, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    s = np.sqrt(1 - z * z)
    X = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    ratios = []
    for bw in (0.2, 0.1, 0.05):
        lw_d = dist_arr(X, NORTH)
        k = geodesic_kernel(lw_d, GeodesicKernel(bw))
        inside = k > 0
        mu0 = k[inside].mean()
        mu1 = (k[inside] * lw_d[inside]).mean()
        mu2 = (k[inside] * lw_d[inside] ** 2).mean()
        ratios.append(mu2 * mu0 / mu1**2)
    for a, b in zip(ratios, ratios[1:]):
        assert abs(a - b) / abs(a) <= 0.10
