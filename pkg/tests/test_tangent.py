import numpy as np
import pytest

from locfrechet.errors import (
    AntipodalPointsError,
    DegenerateSpectrumError,
    EmptySampleError,
    GridMismatchError,
)
from locfrechet.frechet import frechet_curve_mean
from locfrechet.geometry import ManifoldCurve, TimeGrid, exp_arr
from locfrechet.tangent import (
    CovarianceOperator,
    EigenSystem,
    TangentCurve,
    empirical_covariance,
    inner_product_H,
    load_eigensystem,
    log_map_sample,
    norm_H,
    reconstruct,
    rfpca,
    save_eigensystem,
    score_matrix,
    scores,
    sinusoid_basis,
)

from conftest import cap_points, chord_distance

GRID = TimeGrid.regular(25)
MU = ManifoldCurve.constant(GRID, [0.0, 0.0, 1.0])


def make_tangent(vec_fn):
    vecs = np.array([vec_fn(t) for t in GRID.nodes])
    return TangentCurve(GRID, MU, vecs)


def tangent_sample_from(rng, n, scale=0.3):
    # random tangent fields of full rank (z is radial at the pole)
    curves = []
    for _ in range(n):
        vecs = scale * rng.standard_normal((GRID.n_nodes, 3))
        vecs[:, 2] = 0.0
        curves.append(TangentCurve(GRID, MU, vecs))
    return curves


def test_log_map_sample_identity_and_orthogonal_case():
    out = log_map_sample([MU], MU)
    assert np.all(out[0].vecs == 0)

    g2 = TimeGrid.regular(2)
    mu2 = ManifoldCurve.constant(g2, [0, 0, 1])
    x = ManifoldCurve.constant(g2, [1, 0, 0])
    v = log_map_sample([x], mu2)[0]
    assert np.allclose(v.vecs, [[np.pi / 2, 0, 0]] * 2, atol=1e-15)


def test_log_map_sample_round_trip(rng):
    curves = [ManifoldCurve(GRID, cap_points(rng, 25, [0, 0, 1], 0.4)) for _ in range(5)]
    tans = log_map_sample(curves, MU)
    for c, f in zip(curves, tans):
        back = exp_arr(MU.points, f.vecs)
        assert np.max(chord_distance(back, c.points)) <= 1e-9


def test_log_map_sample_antipodal_annotated():
    g2 = TimeGrid.regular(3)
    mu2 = ManifoldCurve.constant(g2, [0, 0, 1])
    pts = np.array([[0, 0, 1.0], [0, 0, -1.0], [0, 0, 1.0]])
    with pytest.raises(AntipodalPointsError) as exc:
        log_map_sample([ManifoldCurve(g2, pts)], mu2)
    assert exc.value.curve_index == 0
    assert exc.value.node_index == 1


def test_inner_product_trivials():
    zero = make_tangent(lambda t: [0.0, 0.0, 0.0])
    ones = make_tangent(lambda t: [1.0, 0.0, 0.0])
    assert inner_product_H(zero, ones) == 0.0
    assert inner_product_H(ones, ones) == pytest.approx(1.0, abs=1e-14)


def test_inner_product_against_refined_quadrature(rng):
    f = make_tangent(lambda t: [np.sin(2.3 * t), np.cos(1.7 * t), 0.0])
    g = make_tangent(lambda t: [t, np.sin(5 * t), 0.0])
    coarse = inner_product_H(f, g)
    tt = np.linspace(0, 1, 10001)
    integrand = np.sin(2.3 * tt) * tt + np.cos(1.7 * tt) * np.sin(5 * tt)
    fine = np.trapezoid(integrand, tt)
    assert abs(coarse - fine) / abs(fine) <= 1e-3


def test_inner_product_grid_mismatch():
    f = make_tangent(lambda t: [1.0, 0, 0])
    other_grid = TimeGrid.regular(30)
    g = TangentCurve(other_grid, ManifoldCurve.constant(other_grid, [0, 0, 1]), np.zeros((30, 3)))
    with pytest.raises(GridMismatchError):
        inner_product_H(f, g)


def test_covariance_trivials(rng):
    zeros = [make_tangent(lambda t: [0, 0, 0]) for _ in range(3)]
    cov = empirical_covariance(zeros)
    assert np.all(cov.matrix == 0)

    f = make_tangent(lambda t: [np.sin(np.pi * t), 0.5, 0.0])
    cov = empirical_covariance([f, f, f, f])
    es = rfpca(cov, 3)
    assert es.eigvals[0] == pytest.approx(inner_product_H(f, f), abs=1e-8)
    assert np.all(es.eigvals[1:] <= 1e-10)

    with pytest.raises(EmptySampleError):
        empirical_covariance([f])


def test_rfpca_zero_operator_degenerate():
    zeros = [make_tangent(lambda t: [0, 0, 0]) for _ in range(3)]
    with pytest.raises(DegenerateSpectrumError):
        rfpca(empirical_covariance(zeros), 2)


def test_rfpca_rank_one_normalized():
    f = make_tangent(lambda t: [np.sin(np.pi * t) * 2.0, 1.0, 0.0])
    norm2 = inner_product_H(f, f)
    es = rfpca(empirical_covariance([f, f]), 2)
    phi1 = es.eigfuns[0]
    expected = f.vecs / np.sqrt(norm2)
    sign = np.sign(np.sum(phi1 * expected))
    assert np.max(np.abs(phi1 - sign * expected)) <= 1e-8


def test_rfpca_matches_dense_eigensolver_oracle(rng):
    # random PSD operator on a 20-node grid, checked against a direct
    # solve of the generalized eigenproblem C W phi = lam phi
    g = TimeGrid.regular(20)
    mu = ManifoldCurve.constant(g, [0, 0, 1])
    a = rng.standard_normal((60, 60))
    raw = a @ a.T / 60.0
    w = np.repeat(g.trapezoid_weights, 3)
    mat = np.sqrt(w)[:, None] * raw * np.sqrt(w)[None, :]
    cov = CovarianceOperator(g, mu, mat)
    es = rfpca(cov, 6)
    oracle = np.sort(np.linalg.eigvals(raw @ np.diag(w)).real)[::-1][:6]
    assert np.max(np.abs(es.eigvals - oracle)) <= 1e-8


def test_rfpca_orthonormality_and_sign_convention(rng):
    sample = tangent_sample_from(rng, 30)
    es = rfpca(empirical_covariance(sample), 4)
    for j in range(4):
        fj = TangentCurve(GRID, MU, es.eigfuns[j])
        for k in range(4):
            fk = TangentCurve(GRID, MU, es.eigfuns[k])
            assert inner_product_H(fj, fk) == pytest.approx(float(j == k), abs=1e-8)
        flat = es.eigfuns[j].ravel()
        nz = flat[np.abs(flat) > 1e-8]
        assert nz.size and nz[0] > 0

    es2 = rfpca(empirical_covariance(sample), 4)
    assert np.array_equal(es.eigfuns, es2.eigfuns)
    assert np.array_equal(es.eigvals, es2.eigvals)


def test_rfpca_k_too_large():
    f = make_tangent(lambda t: [1.0, 0, 0])
    cov = empirical_covariance([f, f])
    with pytest.raises(ValueError):
        rfpca(cov, 76)


def test_synthetic_spectrum_recovery():
    rng = np.random.default_rng(3)
    # sample built from two fixed orthonormal directions with known
    # coefficient variances (4, 1)
    phi1 = make_tangent(lambda t: [np.sqrt(2.0) * np.sin(np.pi * t), 0.0, 0.0])
    phi2 = make_tangent(lambda t: [0.0, np.sqrt(2.0) * np.sin(np.pi * t), 0.0])
    n1 = np.sqrt(inner_product_H(phi1, phi1))
    f1, f2 = phi1.vecs / n1, phi2.vecs / np.sqrt(inner_product_H(phi2, phi2))
    sample = []
    for _ in range(500):
        c1, c2 = 2.0 * rng.standard_normal(), rng.standard_normal()
        sample.append(TangentCurve(GRID, MU, c1 * f1 + c2 * f2))
    es = rfpca(empirical_covariance(sample), 2)
    assert abs(es.eigvals[0] - 4.0) / 4.0 <= 0.10
    assert abs(es.eigvals[1] - 1.0) / 1.0 <= 0.10


def test_scores_and_reconstruct_round_trips(rng):
    sample = tangent_sample_from(rng, 12)
    es = rfpca(empirical_covariance(sample), 4)

    assert np.allclose(scores(reconstruct(np.zeros(4), es), es), 0.0)
    e1 = np.array([1.0, 0, 0, 0])
    rec = reconstruct(e1, es)
    assert np.max(np.abs(rec.vecs - es.eigfuns[0])) <= 1e-12

    c = np.array([0.3, -1.2, 0.05, 0.7])
    back = scores(reconstruct(c, es), es)
    assert np.max(np.abs(back - c)) <= 1e-8


def test_full_rank_round_trip_and_parseval(rng):
    sample = tangent_sample_from(rng, 40)
    full = rfpca(empirical_covariance(sample), 75)
    f = sample[0]
    sc = scores(f, full)
    rec = reconstruct(sc, full)
    diff = TangentCurve(GRID, MU, rec.vecs - f.vecs)
    assert norm_H(diff) <= 1e-7
    assert abs(inner_product_H(f, f) - float(sc @ sc)) <= 1e-7


def test_trace_identity(rng):
    sample = tangent_sample_from(rng, 15)
    cov = empirical_covariance(sample)
    total = np.mean([inner_product_H(f, f) for f in sample])
    assert abs(np.trace(cov.matrix) - total) <= 1e-8


def test_mean_log_small_at_frechet_mean(rng):
    curves = [ManifoldCurve(GRID, cap_points(rng, 25, [0, 0, 1], 0.35)) for _ in range(12)]
    mu = frechet_curve_mean(curves)
    tans = log_map_sample(curves, mu)
    mean_vec = np.mean([f.vecs for f in tans], axis=0)
    hnorm = np.sqrt(GRID.trapezoid_weights @ np.sum(mean_vec * mean_vec, axis=1))
    assert hnorm <= 5 * 1e-10 * np.sqrt(GRID.n_nodes)


def test_sinusoid_basis_orthonormal():
    es = sinusoid_basis(GRID, MU, 3)
    for j in range(3):
        fj = TangentCurve(GRID, MU, es.eigfuns[j])
        for k in range(3):
            fk = TangentCurve(GRID, MU, es.eigfuns[k])
            assert inner_product_H(fj, fk) == pytest.approx(float(j == k), abs=1e-10)
        assert np.max(np.abs(np.sum(MU.points * es.eigfuns[j], axis=1))) <= 1e-12


def test_eigensystem_csv_round_trip(tmp_path, rng):
    sample = tangent_sample_from(rng, 10)
    es = rfpca(empirical_covariance(sample), 3)
    p1, p2 = tmp_path / "eigvals.csv", tmp_path / "eigfuns.csv"
    save_eigensystem(es, p1, p2)
    back = load_eigensystem(p1, p2)
    assert np.array_equal(back.eigvals, es.eigvals)
    assert np.array_equal(back.eigfuns, es.eigfuns)
    assert np.array_equal(back.grid.nodes, es.grid.nodes)
    assert np.max(np.abs(back.base.points - es.base.points)) <= 1e-15
