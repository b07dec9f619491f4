"""Projection local linear Frechet regression in the tangent space.

The predictor works component by component on RFPC scores: a kernel on
the H-distance between log-mapped regressors and the target produces
local weighted moments, the moments give a slope eigenvalue and a
predicted score per component, and the predicted scores are assembled
into a tangent curve and mapped back to the sphere.

Also houses the two parametric bandwidth models (log and power).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWindowError, EmptyWindowError
from .geometry import ManifoldCurve, exp_arr
from .tangent import (
    EigenSystem,
    log_map_sample,
    score_matrix,
    scores,
    reconstruct,
)

# Tangent curves whose node norm exceeds this cannot be exp-mapped
# meaningfully; they are clipped and flagged rather than crashed on.
CLIP_NORM = np.pi - 1e-6

KERNEL_FAMILIES = ("epanechnikov",)


@dataclass(frozen=True)
class BandwidthSpec:
    """Bandwidth for the kernel on H-distances."""

    value: float
    kernel: str = "epanechnikov"

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("bandwidth must be positive")
        if self.kernel not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.kernel!r}")


@dataclass(frozen=True)
class LocalMoments:
    """Kernel-weighted empirical moments driving the local linear fit.

    All per-component fields are arrays aligned with the columns of the
    score matrices they were computed from.
    """

    mu0: float
    mu1: np.ndarray
    mu2: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    sigma0sq: np.ndarray


def kernel_weight_H(dist, bw: BandwidthSpec):
    """Normalized Epanechnikov kernel on [0, bw); zero outside."""
    d = np.asarray(dist, dtype=float)
    u = d / bw.value
    out = np.where(u < 1.0, 0.75 / bw.value * (1.0 - u * u), 0.0)
    return float(out) if np.isscalar(dist) else out


def empirical_local_moments(
    X_scores: np.ndarray,
    Y_scores: np.ndarray,
    x0_scores: np.ndarray,
    dists: np.ndarray,
    bw: BandwidthSpec,
) -> LocalMoments:
    """Kernel-weighted moments of the score columns around x0.

    Sample means are taken over the kernel window (out-of-window
    samples are filtered before any arithmetic, so deleting them is a
    bit-for-bit no-op; every downstream quantity is a ratio of
    moment forms, which the normalization count cancels out of).

    Raises EmptyWindowError when fewer than two samples carry positive
    kernel weight.
    """
    X = np.atleast_2d(np.asarray(X_scores, dtype=float))
    Y = np.atleast_2d(np.asarray(Y_scores, dtype=float))
    n = X.shape[0]
    if n < 2 or Y.shape != X.shape:
        raise ValueError("need matched score matrices with n >= 2 rows")
    k_all = kernel_weight_H(np.asarray(dists, dtype=float), bw)
    inside = k_all > 0
    m = int(np.count_nonzero(inside))
    if m < 2:
        raise EmptyWindowError("fewer than 2 samples inside the bandwidth window")
    k_i = k_all[inside]
    delta = X[inside] - np.asarray(x0_scores, dtype=float)[None, :]
    y = Y[inside]
    mu0 = float(np.sum(k_i)) / m
    mu1 = k_i @ delta / m
    mu2 = k_i @ (delta * delta) / m
    r0 = k_i @ y / m
    r1 = k_i @ (delta * y) / m
    return LocalMoments(mu0, mu1, mu2, r0, r1, mu2 * mu0 - mu1 * mu1)


def _ridge(m: LocalMoments, k: int) -> float:
    return 1e-10 * (1.0 + m.mu2[k] * m.mu0)


def slope_eigenvalue(m: LocalMoments, k: int) -> float:
    """Estimated slope eigenvalue (mu0 r1 - r0 mu1) / sigma0^2 for
    component k, ridge-regularized in the denominator."""
    if m.sigma0sq[k] <= 0.0:
        raise DegenerateWindowError(f"component {k}: no score spread in the window")
    return float((m.mu0 * m.r1[k] - m.r0[k] * m.mu1[k]) / (m.sigma0sq[k] + _ridge(m, k)))


def predict_coefficient(m: LocalMoments, k: int) -> float:
    """Predicted score (mu2 r0 - mu1 r1) / sigma0^2 for component k."""
    if m.sigma0sq[k] <= 0.0:
        raise DegenerateWindowError(f"component {k}: no score spread in the window")
    return float((m.mu2[k] * m.r0[k] - m.mu1[k] * m.r1[k]) / (m.sigma0sq[k] + _ridge(m, k)))


def component_weights(
    m: LocalMoments,
    k: int,
    X_scores: np.ndarray,
    x0_scores: np.ndarray,
    dists: np.ndarray,
    bw: BandwidthSpec,
) -> np.ndarray:
    """Per-sample weights S^(k) = K_i (mu2 - mu1 delta_i) / sigma0^2,
    zero outside the kernel window.

    Their mean over the window is exactly 1 by construction; the
    predicted coefficient equals the window mean of S^(k) Y-score.
    """
    if m.sigma0sq[k] <= 0.0:
        raise DegenerateWindowError(f"component {k}: no score spread in the window")
    k_i = kernel_weight_H(np.asarray(dists, dtype=float), bw)
    delta = np.asarray(X_scores, dtype=float)[:, k] - float(np.asarray(x0_scores)[k])
    out = k_i * (m.mu2[k] - m.mu1[k] * delta) / m.sigma0sq[k]
    return np.where(k_i > 0, out, 0.0)


@dataclass(frozen=True)
class ExtrinsicPrediction:
    """A predicted response curve plus per-node clip flags and the
    per-component predicted scores that produced it."""

    curve: ManifoldCurve
    clipped: np.ndarray
    components: np.ndarray
    coefficients: np.ndarray

    @property
    def any_clipped(self) -> bool:
        return bool(np.any(self.clipped))


def extrinsic_predict(
    sample,
    x0: ManifoldCurve,
    basis: EigenSystem,
    component_set,
    bw: BandwidthSpec,
) -> ExtrinsicPrediction:
    """Projection local linear prediction of the response curve at x0.

    The sample and x0 are log-mapped at the basis' base curve, scored,
    locally fit per retained component, reassembled in the tangent
    space (clipping over-long vectors) and exp-mapped back.
    """
    mu = basis.base
    lx = log_map_sample(sample.regressors, mu)
    ly = log_map_sample(sample.responses, mu)
    l0 = log_map_sample([x0], mu)[0]
    X = score_matrix(lx, basis)
    Y = score_matrix(ly, basis)
    x0s = scores(l0, basis)
    retained = basis.retained(component_set)
    if retained.size == 0:
        raise ValueError("no retained components after dropping the near-zero tail")

    diff = X[:, retained] - x0s[retained][None, :]
    dists = np.sqrt(np.sum(diff * diff, axis=1))
    m = empirical_local_moments(X[:, retained], Y[:, retained], x0s[retained], dists, bw)

    coeffs = np.zeros(retained.size)
    for slot, k in enumerate(retained):
        try:
            coeffs[slot] = predict_coefficient(m, slot)
        except DegenerateWindowError as exc:
            raise DegenerateWindowError(f"component {k}: {exc}") from exc

    full = np.zeros(basis.n_components)
    full[retained] = coeffs
    tangent = reconstruct(full, basis)

    vecs = np.array(tangent.vecs)
    norms = np.linalg.norm(vecs, axis=1)
    clipped = norms > CLIP_NORM
    if np.any(clipped):
        vecs[clipped] *= (CLIP_NORM / norms[clipped])[:, None]
    points = exp_arr(mu.points, vecs)
    return ExtrinsicPrediction(ManifoldCurve(mu.grid, points), clipped, retained, coeffs)


def bandwidth_from_log_model(n: int, beta: float) -> float:
    """Bandwidth (ln n)^(-1/beta) for sample size n."""
    if n < 2:
        raise ValueError("log bandwidth model needs n >= 2")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return math.log(n) ** (-1.0 / beta)


def bandwidth_from_power_model(n, beta: float) -> float:
    """Bandwidth n^(-beta), beta in (0, 1), n the functional sample
    size (in minutes for ingested satellite runs)."""
    if n < 1:
        raise ValueError("power bandwidth model needs n >= 1")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return float(n) ** (-beta)


def save_prediction_csv(pred: ExtrinsicPrediction, path):
    """One row per node: t, x, y, z, clipped_flag."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x", "y", "z", "clipped_flag"])
        for j, t in enumerate(pred.curve.grid.nodes):
            x, y, z = pred.curve.points[j]
            wr.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z)), int(pred.clipped[j])])
