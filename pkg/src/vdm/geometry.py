"""Low-level linear geometry: planes, rigid motions, plane intersections.

Everything downstream (boundary regeneration, Booleans, event detection)
derives vertex positions from plane intersections, so this module is the
single source of numerical truth for that arithmetic.
"""
from __future__ import annotations

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate geometric input (zero vectors, rank-deficient solves)."""


def vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise GeometryError(f"expected 3-vector, got shape {v.shape}")
    return v


def unit(v) -> np.ndarray:
    v = vec3(v)
    n = float(np.linalg.norm(v))
    if n < 1e-14:
        raise GeometryError("cannot normalize near-zero vector")
    return v / n


def rotation_matrix(axis_dir, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis direction."""
    u = unit(axis_dir)
    c, s = np.cos(angle), np.sin(angle)
    ux = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return c * np.eye(3) + s * ux + (1.0 - c) * np.outer(u, u)


def cross3(a, b) -> np.ndarray:
    """3-vector cross product without numpy's axis plumbing overhead."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


class Plane:
    """Oriented plane { p : normal . p = offset } with unit normal.

    Instances are treated as immutable values; all transforms return
    new planes.
    """

    __slots__ = ("normal", "offset", "_basis")

    def __init__(self, normal, offset: float, _skip_normalize: bool = False):
        n = vec3(normal)
        if not _skip_normalize:
            n = unit(n)
        self.normal = n
        self.offset = float(offset)
        self._basis = None
        if not np.isfinite(self.offset):
            raise GeometryError("plane offset must be finite")

    def evaluate(self, p) -> float:
        """Signed distance of a point from the plane (positive on the normal side)."""
        return float(np.dot(self.normal, p) - self.offset)

    def flipped(self) -> "Plane":
        return Plane(-self.normal, -self.offset, _skip_normalize=True)

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic orthonormal in-plane basis (u, v) with u x v = normal."""
        if self._basis is None:
            n = self.normal
            k = int(np.argmin(np.abs(n)))
            e = np.zeros(3)
            e[k] = 1.0
            u = unit(cross3(n, e))
            v = cross3(n, u)
            self._basis = (u, v)
        return self._basis

    def origin_point(self) -> np.ndarray:
        return self.normal * self.offset

    def project_2d(self, pts: np.ndarray) -> np.ndarray:
        """Project Nx3 points into the (u, v) basis of this plane."""
        u, v = self.basis()
        pts = np.atleast_2d(pts)
        return np.column_stack([pts @ u, pts @ v])

    def lift_3d(self, pts2: np.ndarray) -> np.ndarray:
        u, v = self.basis()
        pts2 = np.atleast_2d(pts2)
        return np.outer(pts2[:, 0], u) + np.outer(pts2[:, 1], v) + self.origin_point()

    def translated(self, delta) -> "Plane":
        return Plane(self.normal, self.offset + float(np.dot(self.normal, delta)),
                     _skip_normalize=True)

    def rotated(self, axis_point, axis_dir, angle: float) -> "Plane":
        r = rotation_matrix(axis_dir, angle)
        p = vec3(axis_point)
        n = r @ self.normal
        # offset of the rotated plane: rotate one of its points about the axis
        o = (self.offset - float(np.dot(self.normal, p))) + float(np.dot(n, p))
        return Plane(n, o, _skip_normalize=True)

    def __repr__(self) -> str:
        return f"Plane({self.normal.tolist()}, {self.offset})"


def intersect_3_planes(a: Plane, b: Plane, c: Plane,
                       cond_limit: float = 1e10) -> np.ndarray | None:
    """Intersection point of three planes, or None if nearly singular."""
    m = np.array([a.normal, b.normal, c.normal])
    rhs = np.array([a.offset, b.offset, c.offset])
    det = np.linalg.det(m)
    scale = max(1.0, float(np.abs(m).max()))
    if abs(det) < (scale ** 3) / cond_limit:
        return None
    return np.linalg.solve(m, rhs)


def best_fit_point(planes: list[Plane]) -> tuple[np.ndarray, float]:
    """Least-squares common point of >= 3 planes and the max plane distance."""
    m = np.array([p.normal for p in planes])
    rhs = np.array([p.offset for p in planes])
    pt, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    resid = float(np.max(np.abs(m @ pt - rhs)))
    return pt, resid


def intersect_2_planes(a: Plane, b: Plane,
                       parallel_eps: float = 1e-12) -> tuple[np.ndarray, np.ndarray] | None:
    """Line of intersection (point, unit direction) of two planes, or None if parallel."""
    d = cross3(a.normal, b.normal)
    nd = float(np.linalg.norm(d))
    if nd < parallel_eps:
        return None
    d = d / nd
    # point via the 2x2 system in the plane spanned by the two normals
    n1, n2 = a.normal, b.normal
    dot = float(np.dot(n1, n2))
    det = 1.0 - dot * dot
    c1 = (a.offset - b.offset * dot) / det
    c2 = (b.offset - a.offset * dot) / det
    return c1 * n1 + c2 * n2, d


def planes_coincide(a: Plane, b: Plane, linear_eps: float, angular_eps: float) -> int:
    """0 if distinct, +1 if same plane and orientation, -1 if same plane opposed."""
    dot = float(np.dot(a.normal, b.normal))
    if dot > 1.0 - angular_eps and abs(a.offset - b.offset) <= linear_eps:
        return 1
    if dot < -1.0 + angular_eps and abs(a.offset + b.offset) <= linear_eps:
        return -1
    return 0


class RigidMotion:
    """Rotation + translation, for whole-scene invariance checks."""

    def __init__(self, rotation=None, translation=None):
        self.r = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        self.t = np.zeros(3) if translation is None else vec3(translation)

    def apply_point(self, p) -> np.ndarray:
        return self.r @ vec3(p) + self.t

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.r.T + self.t

    def apply_plane(self, pl: Plane) -> Plane:
        n = self.r @ pl.normal
        return Plane(n, pl.offset + float(np.dot(n, self.t)), _skip_normalize=True)

    def apply_dir(self, d) -> np.ndarray:
        return self.r @ vec3(d)
