"""Analytic ray intersections against boxes, cylinders, and planes.

Rays are given as one origin ``o`` (3,) and a bundle of directions ``d``
(N, 3).  Directions are deliberately unnormalized: the renderer builds them
with unit z in the camera frame, so the hit parameter t *is* the camera-space
depth.  Every routine returns per-ray t values with ``inf`` for misses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Hits closer than this are ignored (guards against self-intersection at t=0).
_T_MIN = 1e-9


@dataclass
class Box:
    """Axis-aligned box in its local frame, corners ``lo`` and ``hi``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have positive extent on every axis")

    def intersect(self, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / directions
            t_lo = (self.lo - origin) * inv
            t_hi = (self.hi - origin) * inv
        t_near = np.nanmax(np.minimum(t_lo, t_hi), axis=1)
        t_far = np.nanmin(np.maximum(t_lo, t_hi), axis=1)
        t = np.where(t_near > _T_MIN, t_near, t_far)
        hit = (t_far >= t_near) & (t > _T_MIN)
        return np.where(hit, t, np.inf)


@dataclass
class Cylinder:
    """Capped cylinder along the local z axis, base at z=0, top at z=height."""

    radius: float
    height: float

    def __post_init__(self):
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder radius and height must be positive")

    def intersect(self, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
        ox, oy, oz = origin
        dx, dy, dz = directions[:, 0], directions[:, 1], directions[:, 2]
        best = np.full(len(directions), np.inf)

        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - self.radius * self.radius
        disc = b * b - 4.0 * a * c
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = np.sqrt(np.maximum(disc, 0.0))
            for sign in (-1.0, 1.0):
                t = (-b + sign * sq) / (2.0 * a)
                z = oz + t * dz
                ok = (disc >= 0) & (a > 0) & (t > _T_MIN) & (z >= 0.0) & (z <= self.height)
                best = np.where(ok & (t < best), t, best)
            for z_cap in (0.0, self.height):
                t = (z_cap - oz) / dz
                px = ox + t * dx
                py = oy + t * dy
                ok = (t > _T_MIN) & (px * px + py * py <= self.radius * self.radius)
                best = np.where(ok & (t < best), t, best)
        return best


@dataclass
class Plane:
    """Horizontal plane z = height (two-sided, infinite extent)."""

    height: float = 0.0

    def intersect(self, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
        dz = directions[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.height - origin[2]) / dz
        return np.where((dz != 0) & (t > _T_MIN), t, np.inf)


def surface_grid_box(lo: np.ndarray, hi: np.ndarray, spacing: float) -> np.ndarray:
    """Points on all six faces of a box, roughly ``spacing`` apart."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    faces = []
    for axis in range(3):
        u_axis, v_axis = [a for a in range(3) if a != axis]
        u = _axis_ticks(lo[u_axis], hi[u_axis], spacing)
        v = _axis_ticks(lo[v_axis], hi[v_axis], spacing)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        for value in (lo[axis], hi[axis]):
            pts = np.zeros((uu.size, 3))
            pts[:, axis] = value
            pts[:, u_axis] = uu.ravel()
            pts[:, v_axis] = vv.ravel()
            faces.append(pts)
    return np.concatenate(faces, axis=0)


def surface_grid_cylinder(radius: float, height: float, spacing: float) -> np.ndarray:
    """Points on the side and both caps of a cylinder."""
    n_angle = max(8, int(np.ceil(2 * np.pi * radius / spacing)))
    angles = np.linspace(0.0, 2 * np.pi, n_angle, endpoint=False)
    zs = _axis_ticks(0.0, height, spacing)
    aa, zz = np.meshgrid(angles, zs, indexing="ij")
    side = np.column_stack(
        [radius * np.cos(aa.ravel()), radius * np.sin(aa.ravel()), zz.ravel()]
    )
    caps = []
    radii = _axis_ticks(0.0, radius, spacing)
    for z_cap in (0.0, height):
        for r in radii:
            if r == 0.0:
                caps.append(np.array([[0.0, 0.0, z_cap]]))
                continue
            m = max(4, int(np.ceil(2 * np.pi * r / spacing)))
            ring = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
            caps.append(np.column_stack([r * np.cos(ring), r * np.sin(ring), np.full(m, z_cap)]))
    return np.concatenate([side] + caps, axis=0)


def _axis_ticks(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = max(2, int(np.ceil((hi - lo) / spacing)) + 1)
    return np.linspace(lo, hi, n)
