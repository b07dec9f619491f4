"""Exact geometry of the unit sphere S^2 in R^3.

Points, tangent vectors, time grids and sphere-valued curves, together
with the five primitive operations every regression routine in this
package is built on: geodesic distance, exponential and logarithm maps,
tangent projection and the supremum distance between curves.

Everything here is immutable after construction and free of shared
mutable state, so all operations are safe to call concurrently.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AntipodalPointsError,
    GridMismatchError,
    InvalidPointError,
)

# A log map within ANTIPODAL_MARGIN of the cut locus (distance pi) is
# refused: the map is undefined at distance pi and numerically useless
# just inside it.
ANTIPODAL_MARGIN = 1e-9

# Inputs farther than this from unit norm are treated as corrupt data
# rather than rounding drift.
RENORM_TOL = 1e-6


def _as_vector3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise InvalidPointError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidPointError("non-finite coordinates")
    return v


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere, stored as a unit 3-vector.

    Inputs within ``RENORM_TOL`` of unit norm are renormalized;
    anything farther off is rejected.
    """

    coords: np.ndarray

    def __post_init__(self):
        v = _as_vector3(self.coords)
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > RENORM_TOL:
            raise InvalidPointError(f"norm {norm:.9f} is too far from 1 to renormalize")
        if abs(norm - 1.0) > 1e-14:  # keep construction idempotent
            v = v / norm
        object.__setattr__(self, "coords", _readonly(v))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class TangentVector:
    """A vector in the tangent plane of the sphere at ``base``.

    Its Euclidean norm equals the geodesic distance to the point it
    maps to under the exponential map.
    """

    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self):
        v = _as_vector3(self.vec)
        if abs(float(self.base.coords @ v)) > 1e-10:
            raise InvalidPointError("tangent vector is not orthogonal to its base point")
        object.__setattr__(self, "vec", _readonly(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes spanning [0, 1]."""

    nodes: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a time grid needs at least two nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must be strictly increasing")
        if abs(t[0]) > 1e-12 or abs(t[-1] - 1.0) > 1e-12:
            raise ValueError("time grid must span [0, 1]; rescale at ingestion")
        t = t.copy()
        t[0], t[-1] = 0.0, 1.0
        object.__setattr__(self, "nodes", _readonly(t))

    @staticmethod
    def regular(n_nodes: int) -> "TimeGrid":
        return TimeGrid(np.linspace(0.0, 1.0, n_nodes))

    @staticmethod
    def from_times(times) -> "TimeGrid":
        """Affinely rescale arbitrary increasing times onto [0, 1]."""
        t = np.asarray(times, dtype=float)
        if t.size < 2 or t[-1] == t[0]:
            raise ValueError("need at least two distinct times")
        return TimeGrid((t - t[0]) / (t[-1] - t[0]))

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights of the trapezoid rule on this grid."""
        t = self.nodes
        w = np.zeros_like(t)
        dt = np.diff(t)
        w[:-1] += dt / 2.0
        w[1:] += dt / 2.0
        return w

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.nodes, other.nodes)

    def matches(self, other: "TimeGrid", tol: float = 0.0) -> bool:
        if self.n_nodes != other.n_nodes:
            return False
        if tol == 0.0:
            return bool(np.array_equal(self.nodes, other.nodes))
        return bool(np.max(np.abs(self.nodes - other.nodes)) <= tol)


def require_shared_grid(a: TimeGrid, b: TimeGrid):
    if not a.matches(b):
        raise GridMismatchError("curves do not share a time grid")


@dataclass(frozen=True)
class ManifoldCurve:
    """A sphere-valued curve: one SpherePoint per grid node, stored as
    an (N, 3) array of unit rows."""

    grid: TimeGrid
    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.shape != (self.grid.n_nodes, 3):
            raise ValueError(
                f"points shape {p.shape} does not match grid with {self.grid.n_nodes} nodes"
            )
        norms = np.linalg.norm(p, axis=1)
        off = np.abs(norms - 1.0)
        if np.any(off > RENORM_TOL):
            raise InvalidPointError("curve contains points too far from the unit sphere")
        fix = off > 1e-14  # keep construction idempotent
        if np.any(fix):
            p = p.copy()
            p[fix] /= norms[fix, None]
        object.__setattr__(self, "points", _readonly(p))

    @property
    def n_nodes(self) -> int:
        return self.grid.n_nodes

    def point(self, j: int) -> SpherePoint:
        return SpherePoint(self.points[j])

    @staticmethod
    def constant(grid: TimeGrid, p) -> "ManifoldCurve":
        p = np.asarray(p, dtype=float)
        return ManifoldCurve(grid, np.tile(p, (grid.n_nodes, 1)))


# ---------------------------------------------------------------------------
# Vectorized primitives on raw arrays.  These are the workhorses; the
# typed operations below are thin wrappers over them.
# ---------------------------------------------------------------------------

def dist_arr(p, q) -> np.ndarray:
    """Geodesic distance between unit rows of ``p`` and ``q`` (broadcasting).

    Identical rows give exactly zero (the self dot product of a unit
    vector can round one ulp below 1, which arccos would blow up to
    ~1.5e-8).
    """
    p, q = np.asarray(p), np.asarray(q)
    c = np.sum(p * q, axis=-1)
    out = np.arccos(np.clip(c, -1.0, 1.0))
    same = np.all(p == q, axis=-1)
    if np.any(same):
        out = np.where(same, 0.0, out)
    return out


def log_arr(base, q) -> np.ndarray:
    """Log map of unit rows ``q`` at unit rows ``base`` (broadcasting).

    Raises AntipodalPointsError if any pair is within ANTIPODAL_MARGIN
    of the cut locus.
    """
    base = np.asarray(base, dtype=float)
    q = np.asarray(q, dtype=float)
    d = dist_arr(base, q)
    if np.any(d >= np.pi - ANTIPODAL_MARGIN):
        raise AntipodalPointsError("log map undefined: points are (near-)antipodal")
    u = q - np.sum(base * q, axis=-1, keepdims=True) * base
    un = np.linalg.norm(u, axis=-1, keepdims=True)
    small = un[..., 0] < 1e-300
    un = np.where(un < 1e-300, 1.0, un)
    out = u / un * d[..., None]
    if np.any(small):
        out = np.where(small[..., None], 0.0, out)
    return out


def exp_arr(base, v) -> np.ndarray:
    """Exp map of tangent rows ``v`` at unit rows ``base`` (broadcasting)."""
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nv[..., 0] < 1e-300
    safe = np.where(nv < 1e-300, 1.0, nv)
    out = np.cos(nv) * base + np.sin(nv) * (v / safe)
    out = np.where(small[..., None], np.broadcast_to(base, out.shape), out)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def project_arr(base, w) -> np.ndarray:
    """Remove the radial component of ``w`` at unit rows ``base``."""
    base = np.asarray(base, dtype=float)
    w = np.asarray(w, dtype=float)
    return w - np.sum(base * w, axis=-1, keepdims=True) * base


# ---------------------------------------------------------------------------
# Typed operations
# ---------------------------------------------------------------------------

def geodesic_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Great-circle distance arccos(p . q) in [0, pi]."""
    return float(dist_arr(p.coords, q.coords))


def log_map(base: SpherePoint, q: SpherePoint) -> TangentVector:
    """Tangent vector at ``base`` pointing to ``q`` with norm d(base, q)."""
    return TangentVector(base, log_arr(base.coords, q.coords))


def exp_map(v: TangentVector) -> SpherePoint:
    """Endpoint of the unit-time geodesic from v.base with velocity v."""
    return SpherePoint(exp_arr(v.base.coords, v.vec))


def project_to_tangent(base: SpherePoint, w) -> TangentVector:
    """Project an ambient 3-vector onto the tangent plane at ``base``."""
    return TangentVector(base, project_arr(base.coords, _as_vector3(w)))


def curve_distance(x: ManifoldCurve, y: ManifoldCurve) -> float:
    """Supremum over nodes of the node-wise geodesic distance."""
    require_shared_grid(x.grid, y.grid)
    return float(np.max(dist_arr(x.points, y.points)))


# ---------------------------------------------------------------------------
# Manifold interface
# ---------------------------------------------------------------------------

class Manifold(ABC):
    """The five primitives the regression code relies on.

    Only the unit 2-sphere ships; alternates can be added without
    touching any predictor.
    """

    @abstractmethod
    def distance(self, p, q): ...

    @abstractmethod
    def log(self, base, q): ...

    @abstractmethod
    def exp(self, base, v): ...

    @abstractmethod
    def project(self, base, w): ...

    @abstractmethod
    def curve_distance(self, x, y): ...


class UnitSphere(Manifold):
    """S^2 with the round metric, operating on raw arrays."""

    def distance(self, p, q):
        return dist_arr(p, q)

    def log(self, base, q):
        return log_arr(base, q)

    def exp(self, base, v):
        return exp_arr(base, v)

    def project(self, base, w):
        return project_arr(base, w)

    def curve_distance(self, x, y):
        return float(np.max(dist_arr(x, y)))


SPHERE = UnitSphere()
