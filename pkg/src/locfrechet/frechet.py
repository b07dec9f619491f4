"""Weighted Frechet means on the sphere.

The minimizer of F(w) = sum_i w_i d^2(y_i, w) over the sphere, with
possibly signed weights, plus the node-wise curve mean built on it.

Positive-weight problems are solved by Riemannian gradient descent with
a backtracking line search.  Signed-weight objectives can be non-convex
with several local minima, so whenever any weight is negative the
solver additionally scans an icosphere grid and restarts the descent
from the best cell, returning the better of the two candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DegenerateWeightsError,
    LocFrechetError,
    NonConvergenceError,
)
from .geometry import ManifoldCurve, SpherePoint, dist_arr, require_shared_grid

GRAD_TOL = 1e-8
WEIGHT_FLOOR = 1e-14
GRID_TIE_TOL = 1e-12


@dataclass(frozen=True)
class WeightedPointSet:
    """Sphere points with (possibly signed) weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        # contiguous copies so results do not depend on the memory
        # layout of the caller's arrays (BLAS rounding varies with it)
        p = np.ascontiguousarray(np.atleast_2d(np.asarray(self.points, dtype=float)))
        w = np.ascontiguousarray(np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if p.shape[0] == 0:
            raise ValueError("empty point set")
        if p.shape != (w.size, 3):
            raise ValueError("points and weights have mismatched lengths")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def from_points(points, weights) -> "WeightedPointSet":
        coords = np.array(
            [p.coords if isinstance(p, SpherePoint) else np.asarray(p, float) for p in points]
        )
        return WeightedPointSet(coords, np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 100
    step_tol: float = 1e-10
    grid_level: int = 4
    retries: int = 2

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_tol <= 0:
            raise ValueError("step_tol must be positive")


DEFAULT_OPTIONS = SolverOptions()


@lru_cache(maxsize=None)
def icosphere(level: int) -> np.ndarray:
    """Vertices of the icosahedron subdivided ``level`` times.

    Returns a read-only (10 * 4**level + 2, 3) array of unit vectors in
    a deterministic order.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(level):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            idx = midpoint_cache.get(key)
            if idx is None:
                m = np.add(verts[i], verts[j])
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                idx = len(verts) - 1
                midpoint_cache[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    out = np.array(verts, dtype=float)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _icosphere32(level: int) -> np.ndarray:
    out = icosphere(level).astype(np.float32)
    out.flags.writeable = False
    return out


def frechet_objective(omega, points, weights) -> float:
    """F(omega) = sum_i w_i d^2(y_i, omega)."""
    d = dist_arr(points, np.asarray(omega, dtype=float))
    return float(weights @ (d * d))


_PIN_LIMIT = np.pi - 1e-9


def _nudge(omega: np.ndarray, scale: float) -> np.ndarray:
    # Deterministic escape from the exact antipode of a data point.
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(omega)))] = 1.0
    perp = np.cross(omega, axis)
    perp /= np.linalg.norm(perp)
    out = omega + scale * perp
    return out / np.linalg.norm(out)


def _dists(omega, points):
    c = points @ omega
    np.clip(c, -1.0, 1.0, out=c)
    return np.arccos(c)


def _fused(omega, points):
    """Distances and log vectors of all points at omega, or None when
    omega is (numerically) at the cut locus of some point."""
    c = points @ omega
    np.clip(c, -1.0, 1.0, out=c)
    d = np.arccos(c)
    if float(d.max()) >= _PIN_LIMIT:
        return None
    u = points - np.outer(c, omega)
    un = np.linalg.norm(u, axis=1)
    np.maximum(un, 1e-300, out=un)
    return u * (d / un)[:, None], d


def _fused_nudged(omega, points):
    res = _fused(omega, points)
    scale = 1e-7
    while res is None and scale <= 2e-5:
        omega = _nudge(omega, scale)
        res = _fused(omega, points)
        scale *= 4.0
    return omega, res


def _exp1(base, v):
    nv = float(np.sqrt(v @ v))
    if nv < 1e-300:
        return base
    out = np.cos(nv) * base + (np.sin(nv) / nv) * v
    return out / float(np.sqrt(out @ out))


def _descent(points, weights, start, max_iters, step_tol, abs_weight_sum):
    """Gradient descent with backtracking from ``start``.

    Returns (omega, F(omega), gradient norm); the norm is +inf when the
    iterate ends pinned at a cut locus, where the objective is not
    differentiable (possible for signed weights, whose minimizer may
    push against the antipode of a repelled point).
    """
    omega = np.asarray(start, dtype=float)
    omega, res = _fused_nudged(omega, points)
    if res is None:
        return omega, frechet_objective(omega, points, weights), np.inf
    logs, d = res
    fval = float(weights @ (d * d))
    grad_norm = np.inf
    alpha_start = 1.0
    for _ in range(max_iters):
        g = (weights @ logs) / abs_weight_sum
        gnorm = float(np.sqrt(g @ g))
        grad_norm = 2.0 * gnorm
        if grad_norm <= 0.1 * GRAD_TOL:
            break
        # Backtracking halves alpha until F decreases; warm-started at
        # four times the previously accepted step so ill-conditioned
        # signed objectives do not rediscover a small step every time.
        alpha, accepted = alpha_start, False
        while alpha * gnorm > 1e-18:
            cand = _exp1(omega, alpha * g)
            dc = _dists(cand, points)
            fcand = float(weights @ (dc * dc))
            if fcand < fval:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        alpha_start = min(1.0, 4.0 * alpha)
        omega, fval = cand, fcand
        omega, res = _fused_nudged(omega, points)
        if res is None:
            return omega, frechet_objective(omega, points, weights), np.inf
        logs, d = res
        if alpha * gnorm < step_tol:
            g = (weights @ logs) / abs_weight_sum
            grad_norm = 2.0 * float(np.sqrt(g @ g))
            break
    # Near the optimum the objective decrease underflows before the
    # gradient does, so the line search stalls just short of the
    # certificate.  Close the gap with plain fixed-point steps,
    # accepted only while the gradient norm keeps shrinking.
    if grad_norm > 0.1 * GRAD_TOL:
        for _ in range(16):
            g = (weights @ logs) / abs_weight_sum
            gn = 2.0 * float(np.sqrt(g @ g))
            grad_norm = min(grad_norm, gn)
            if gn <= 0.1 * GRAD_TOL:
                break
            cand = _exp1(omega, g)
            cres = _fused(cand, points)
            if cres is None:
                break
            clogs, cd = cres
            cg = (weights @ clogs) / abs_weight_sum
            cgn = 2.0 * float(np.sqrt(cg @ cg))
            if cgn >= gn:
                break
            omega, logs, d, grad_norm = cand, clogs, cd, cgn
        fval = float(weights @ (d * d))
    return omega, fval, grad_norm


def _euclidean_seed(points, weights):
    m = weights @ points
    norm = np.linalg.norm(m)
    if norm < 1e-12:
        return points[int(np.argmax(np.abs(weights)))].copy()
    return m / norm


def weighted_frechet_mean(
    point_set: WeightedPointSet, opts: SolverOptions = DEFAULT_OPTIONS
) -> SpherePoint:
    """Minimize sum_i w_i d^2(y_i, omega) over the sphere.

    Raises DegenerateWeightsError when the weights carry no mass and
    NonConvergenceError when no convergence certificate is reached
    after all retries.
    """
    points, weights = point_set.points, point_set.weights
    abs_weight_sum = float(np.sum(np.abs(weights)))
    if abs_weight_sum < WEIGHT_FLOOR:
        raise DegenerateWeightsError("sum of |weights| is numerically zero")

    has_negative = bool(np.any(weights < 0))
    seeds = [_euclidean_seed(points, weights)]
    if has_negative:
        # Coarse scan in float32: cell diameters dwarf single-precision
        # rounding and the winning cell is refined in float64 anyway.
        grid = _icosphere32(opts.grid_level)
        d = np.arccos(np.clip(grid @ points.T.astype(np.float32), -1.0, 1.0))
        fgrid = (d * d) @ weights.astype(np.float32)
        best = int(np.nonzero(fgrid <= fgrid.min() + GRID_TIE_TOL)[0][0])
        seeds.append(icosphere(opts.grid_level)[best].copy())

    best_omega, best_f, best_grad = None, np.inf, np.inf
    for attempt in range(opts.retries + 1):
        iters = opts.max_iters * (2**attempt)
        for seed in seeds:
            omega, fval, grad_norm = _descent(
                points, weights, seed, iters, opts.step_tol, abs_weight_sum
            )
            if fval < best_f:
                best_omega, best_f, best_grad = omega, fval, grad_norm
        if best_grad <= GRAD_TOL or has_negative:
            # Signed-weight runs are certified by the grid scan: the
            # refined candidate is at least as good as the best cell.
            return SpherePoint(best_omega)
    raise NonConvergenceError(
        f"no certificate after {opts.retries + 1} attempts (gradient norm {best_grad:.3e})"
    )


def frechet_curve_mean(
    curves, opts: SolverOptions = DEFAULT_OPTIONS
) -> ManifoldCurve:
    """Node-wise unweighted Frechet mean of sphere-valued curves."""
    curves = list(curves)
    if not curves:
        raise ValueError("no curves given")
    grid = curves[0].grid
    for c in curves[1:]:
        require_shared_grid(grid, c.grid)
    stack = np.stack([c.points for c in curves])  # (n, N, 3)
    weights = np.ones(stack.shape[0])
    out = np.empty((grid.n_nodes, 3))
    for j in range(grid.n_nodes):
        try:
            out[j] = weighted_frechet_mean(
                WeightedPointSet(stack[:, j, :], weights), opts
            ).coords
        except LocFrechetError as exc:
            raise type(exc)(f"node {j}: {exc}") from exc
    return ManifoldCurve(grid, out)
