"""Intrinsic local Frechet curve predictors on the sphere.

Two node-wise predictors sharing the weighted Frechet mean solver: a
Nadaraya-Watson type (nonnegative kernel weights) and a local linear
one whose weights are signed, engaging the solver's grid-seeded branch.
Failed nodes are filled by geodesic interpolation and flagged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllNodesFailedError,
    DegenerateWeightsError,
    DegenerateWindowError,
    EmptyWindowError,
    GridMismatchError,
    NonConvergenceError,
)
from .frechet import DEFAULT_OPTIONS, SolverOptions, WeightedPointSet, weighted_frechet_mean
from .geometry import ManifoldCurve, SpherePoint, dist_arr, exp_arr, log_arr

KERNEL_FAMILIES = ("epanechnikov",)

STATUS_OK = "ok"
STATUS_INTERPOLATED = "interpolated"

_NODE_FAILURES = (
    EmptyWindowError,
    DegenerateWindowError,
    DegenerateWeightsError,
    NonConvergenceError,
)


@dataclass(frozen=True)
class GeodesicKernel:
    """Compactly supported kernel on geodesic distance.

    ``bandwidth`` is the support radius in radians; it plays the role
    of the reciprocal of a concentration parameter (larger
    concentration = smaller support).
    """

    bandwidth: float
    family: str = "epanechnikov"

    def __post_init__(self):
        if not 0.0 < self.bandwidth <= np.pi:
            raise ValueError("bandwidth must lie in (0, pi]")
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")


@dataclass(frozen=True)
class LocalLinearWeights:
    """Signed local linear weights at one node, with the moments that
    produced them.  (1/n) * sum(s) == 1 by construction."""

    s: np.ndarray
    mu0: float
    mu1: float
    mu2: float
    sigma0sq: float


def geodesic_kernel(d, kern: GeodesicKernel):
    """Epanechnikov profile (3/(4 bw)) (1 - (d/bw)^2) on [0, bw)."""
    dd = np.asarray(d, dtype=float)
    u = dd / kern.bandwidth
    out = np.where(u < 1.0, 0.75 / kern.bandwidth * (1.0 - u * u), 0.0)
    return float(out) if np.isscalar(d) else out


def _coerce_points(x) -> np.ndarray:
    if isinstance(x, SpherePoint):
        return x.coords
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], SpherePoint):
        return np.array([p.coords for p in x])
    return np.asarray(x, dtype=float)


def nw_predict_node(X_t, Y_t, x_t, kern: GeodesicKernel,
                    opts: SolverOptions = DEFAULT_OPTIONS) -> SpherePoint:
    """Nadaraya-Watson node prediction: the Frechet mean of the
    responses weighted by the kernel at the regressor distances."""
    X = _coerce_points(X_t)
    Y = _coerce_points(Y_t)
    x = _coerce_points(x_t)
    w = geodesic_kernel(dist_arr(X, x), kern)
    inside = w > 0
    if not np.any(inside):
        raise EmptyWindowError("no sample inside the kernel support")
    return weighted_frechet_mean(WeightedPointSet(Y[inside], w[inside]), opts)


def ll_weights_node(X_t, x_t, kern: GeodesicKernel) -> LocalLinearWeights:
    """Signed local linear weights s_i = K_i (mu2 - mu1 d_i) / sigma0^2
    built from the kernel-weighted distance moments at this node.

    Moments are means over the kernel window (out-of-support samples
    are filtered before any arithmetic, making their deletion a
    bit-for-bit no-op; the weights are invariant to the normalization
    count in exact arithmetic).  The returned weight vector is
    full-length with zeros outside the window.
    """
    X = _coerce_points(X_t)
    x = _coerce_points(x_t)
    d_all = dist_arr(X, x)
    k_all = geodesic_kernel(d_all, kern)
    inside = k_all > 0
    m = int(np.count_nonzero(inside))
    if m < 2:
        raise EmptyWindowError("local linear weights need >= 2 in-window samples")
    k_i, d = k_all[inside], d_all[inside]
    mu0 = float(np.sum(k_i)) / m
    mu1 = float(np.sum(k_i * d)) / m
    mu2 = float(np.sum(k_i * d * d)) / m
    sigma0sq = mu0 * mu2 - mu1 * mu1
    if sigma0sq <= 1e-14 * (1.0 + mu0 * mu2):
        raise DegenerateWindowError("zero distance spread in the window")
    s = np.zeros(d_all.size)
    s[inside] = k_i * (mu2 - mu1 * d) / sigma0sq
    return LocalLinearWeights(s, mu0, mu1, mu2, sigma0sq)


def ll_predict_node(X_t, Y_t, x_t, kern: GeodesicKernel,
                    opts: SolverOptions = DEFAULT_OPTIONS) -> SpherePoint:
    """Local linear node prediction: the Frechet mean of the responses
    under the signed weights (grid-seeded restart engages whenever some
    weight is negative)."""
    Y = _coerce_points(Y_t)
    lw = ll_weights_node(X_t, x_t, kern)
    inside = lw.s != 0.0
    return weighted_frechet_mean(WeightedPointSet(Y[inside], lw.s[inside]), opts)


@dataclass(frozen=True)
class IntrinsicPrediction:
    curve: ManifoldCurve
    statuses: tuple

    @property
    def n_interpolated(self) -> int:
        return sum(1 for s in self.statuses if s == STATUS_INTERPOLATED)


def predict_curve(kind: str, sample, x0: ManifoldCurve, kern: GeodesicKernel,
                  opts: SolverOptions = DEFAULT_OPTIONS) -> IntrinsicPrediction:
    """Node-wise NW or LL prediction of the response curve at x0.

    Nodes where the window is empty or degenerate (or the solver gives
    up) are filled by geodesic interpolation between the nearest
    successful neighbors and flagged ``interpolated``.
    """
    if kind not in ("NW", "LL"):
        raise ValueError("kind must be 'NW' or 'LL'")
    grid = sample.grid
    if not grid.matches(x0.grid):
        raise GridMismatchError("target curve is not on the sample grid")
    X = sample.regressor_array  # (n, N, 3)
    Y = sample.response_array
    n_nodes = grid.n_nodes
    node_fn = nw_predict_node if kind == "NW" else ll_predict_node

    points = np.zeros((n_nodes, 3))
    ok = np.zeros(n_nodes, dtype=bool)
    for j in range(n_nodes):
        try:
            points[j] = node_fn(X[:, j, :], Y[:, j, :], x0.points[j], kern, opts).coords
            ok[j] = True
        except _NODE_FAILURES:
            pass
    if not np.any(ok):
        raise AllNodesFailedError("every node prediction failed")

    good = np.nonzero(ok)[0]
    t = grid.nodes
    for j in np.nonzero(~ok)[0]:
        left = good[good < j]
        right = good[good > j]
        if left.size and right.size:
            l, r = left[-1], right[0]
            lam = (t[j] - t[l]) / (t[r] - t[l])
            points[j] = exp_arr(points[l], lam * log_arr(points[l], points[r]))
        elif left.size:
            points[j] = points[left[-1]]
        else:
            points[j] = points[right[0]]
    statuses = tuple(STATUS_OK if flag else STATUS_INTERPOLATED for flag in ok)
    return IntrinsicPrediction(ManifoldCurve(grid, points), statuses)


def save_prediction_csv(pred: IntrinsicPrediction, path):
    """One row per node: t, x, y, z, status (ok | interpolated)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "x", "y", "z", "status"])
        for j, t in enumerate(pred.curve.grid.nodes):
            x, y, z = pred.curve.points[j]
            wr.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z)), pred.statuses[j]])
