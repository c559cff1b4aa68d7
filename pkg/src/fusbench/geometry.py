"""Rigid-transform helpers shared by the camera model, renderer, and metrics.

Poses are 4x4 row-major homogeneous matrices mapping local coordinates to
world coordinates.  The camera convention is x right, y down, z forward,
matching image axes (pixel u grows with camera x, pixel v with camera y).
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def rotation_x(angle: float) -> np.ndarray:
    """3x3 rotation about the x axis by ``angle`` radians."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def make_pose(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    pose = np.eye(4)
    pose[:3, :3] = rotation
    pose[:3, 3] = translation
    return pose


def identity_pose() -> np.ndarray:
    return np.eye(4)


def invert_pose(pose: np.ndarray) -> np.ndarray:
    """Exact inverse of a rigid pose (transpose of R, back-rotated t)."""
    rot = pose[:3, :3]
    inv = np.eye(4)
    inv[:3, :3] = rot.T
    inv[:3, 3] = -rot.T @ pose[:3, 3]
    return inv


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pose product a @ b (apply b first, then a)."""
    return a @ b


def apply_pose(pose: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Transform an (N, 3) array of points by a 4x4 pose."""
    pts = np.asarray(points, dtype=float)
    return pts @ pose[:3, :3].T + pose[:3, 3]


def rotation_about_line(axis: np.ndarray, point: np.ndarray, angle: float) -> np.ndarray:
    """Pose rotating by ``angle`` about the line through ``point`` along ``axis``."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm < _EPS:
        raise ValueError("rotation axis must be nonzero")
    ux, uy, uz = axis / norm
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array(
        [
            [c + ux * ux * (1 - c), ux * uy * (1 - c) - uz * s, ux * uz * (1 - c) + uy * s],
            [uy * ux * (1 - c) + uz * s, c + uy * uy * (1 - c), uy * uz * (1 - c) - ux * s],
            [uz * ux * (1 - c) - uy * s, uz * uy * (1 - c) + ux * s, c + uz * uz * (1 - c)],
        ]
    )
    point = np.asarray(point, dtype=float)
    return make_pose(rot, point - rot @ point)


def translation_pose(offset: np.ndarray) -> np.ndarray:
    return make_pose(np.eye(3), np.asarray(offset, dtype=float))


def look_at(eye: np.ndarray, target: np.ndarray, up: np.ndarray = (0.0, 0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
    """Camera-to-world rotation and translation looking from ``eye`` at ``target``.

    The camera z axis points at the target, x to the right, y downward.
    ``up`` is the world direction that should appear upward in the image;
    it must not be parallel to the viewing direction.
    """
    eye = np.asarray(eye, dtype=float)
    target = np.asarray(target, dtype=float)
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < _EPS:
        raise ValueError("look_at target coincides with the eye position")
    forward = forward / norm
    up = np.asarray(up, dtype=float)
    right = np.cross(forward, up)
    norm = np.linalg.norm(right)
    if norm < _EPS:
        raise ValueError("viewing direction is parallel to the up vector")
    right = right / norm
    down = np.cross(forward, right)
    rotation = np.column_stack([right, down, forward])
    return rotation, eye
