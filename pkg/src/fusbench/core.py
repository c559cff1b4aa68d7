"""Domain types for part-labelled RGB-D frames and the pixel-to-world lift.

Conventions used throughout the package:

* depths are metric distances along the camera z axis (not ray lengths),
* pixel (u, v) lifts to ((u - cx) * d / fx, (v - cy) * d / fy, d) in the
  camera frame, and the extrinsic pose maps camera to world coordinates,
* part labels are small non-negative integers where 0 is background,
* pixel indices are flat row-major offsets into the image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BACKGROUND = 0

_ORTHONORMAL_TOL = 1e-9


class InputError(ValueError):
    """An input violated a documented precondition (bad shape, range, or value)."""


@dataclass
class CameraModel:
    """Pinhole intrinsics plus a camera-to-world rigid pose."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        if self.fx <= 0 or self.fy <= 0:
            raise InputError("focal lengths must be positive")
        if self.rotation.shape != (3, 3):
            raise InputError("rotation must be a 3x3 matrix")
        if self.translation.shape != (3,):
            raise InputError("translation must be a 3-vector")
        err = np.abs(self.rotation @ self.rotation.T - np.eye(3)).max()
        if err > 1e-6 or np.linalg.det(self.rotation) < 0:
            raise InputError("rotation must be orthonormal with determinant +1")

    @property
    def intrinsic_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def pose(self) -> np.ndarray:
        pose = np.eye(4)
        pose[:3, :3] = self.rotation
        pose[:3, 3] = self.translation
        return pose


@dataclass
class DepthMap:
    """Metric depth raster.  Non-finite or non-positive entries are invalid.

    ``max_range`` is optional; when set, readings at or beyond it are also
    treated as invalid (simulated sensors report saturated pixels that way).
    """

    values: np.ndarray
    max_range: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise InputError("depth raster must be 2-D")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def valid_mask(self) -> np.ndarray:
        mask = np.isfinite(self.values) & (self.values > 0.0)
        if self.max_range is not None:
            mask &= self.values < self.max_range
        return mask


@dataclass
class ProbabilityStack:
    """Per-inference class probability maps, shape (K, C, H, W).

    K is the number of stochastic inferences and C the class count including
    background as class 0.
    """

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 4:
            raise InputError("probability stack must have shape (K, C, H, W)")
        if self.num_inferences < 1:
            raise InputError("probability stack needs at least one inference")
        if self.num_classes < 2:
            raise InputError("probability stack needs at least two classes")

    @property
    def num_inferences(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]

    @property
    def height(self) -> int:
        return self.probs.shape[2]

    @property
    def width(self) -> int:
        return self.probs.shape[3]

    def validate(self, tol: float = 1e-6) -> None:
        """Check that every (inference, pixel) column is a probability vector."""
        if np.any(self.probs < 0.0) or not np.all(np.isfinite(self.probs)):
            raise InputError("probabilities must be finite and non-negative")
        sums = self.probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > tol):
            worst = float(np.abs(sums - 1.0).max())
            raise InputError(f"probability columns must sum to 1 (worst error {worst:g})")

    def mean_probabilities(self) -> np.ndarray:
        """Average over inferences, shape (C, H, W)."""
        return self.probs.mean(axis=0)


@dataclass
class SegmentationMap:
    """Integer label raster with ``num_classes`` classes (0 = background)."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise InputError("label raster must be 2-D")
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise InputError("labels must be integers")
        if self.num_classes < 1:
            raise InputError("num_classes must be positive")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise InputError("labels must lie in [0, num_classes)")

    def part_ids(self) -> list[int]:
        """Part labels present in the raster, background excluded, ascending."""
        present = np.unique(self.labels)
        return [int(c) for c in present if c != BACKGROUND]


@dataclass
class PartPoints:
    """World-frame points for one part with per-point provenance.

    ``pixels`` holds flat row-major source-pixel indices; ``uncertainty``
    carries the per-point uncertainty score in [0, 1] (zero when the lift was
    run without an uncertainty map).
    """

    points: np.ndarray
    uncertainty: np.ndarray
    pixels: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.uncertainty = np.asarray(self.uncertainty, dtype=float).reshape(-1)
        self.pixels = np.asarray(self.pixels, dtype=np.int64).reshape(-1)
        if not (len(self.points) == len(self.uncertainty) == len(self.pixels)):
            raise InputError("points, uncertainty, and pixels must have equal length")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class PartPointCloud:
    """Lifted frame grouped by part label."""

    parts: dict[int, PartPoints] = field(default_factory=dict)
    width: int = 0
    height: int = 0

    def part_ids(self) -> list[int]:
        return sorted(c for c in self.parts if c != BACKGROUND)

    def total_points(self) -> int:
        return sum(len(p) for p in self.parts.values())


def argmax_segmentation(stack: ProbabilityStack) -> SegmentationMap:
    """Label each pixel with the class of highest mean probability.

    Ties resolve to the lowest class index (the first maximum).
    """
    mean = stack.mean_probabilities()
    labels = np.argmax(mean, axis=0).astype(np.int32)
    return SegmentationMap(labels=labels, num_classes=stack.num_classes)


def lift_to_world(
    depth: DepthMap,
    seg: SegmentationMap,
    cam: CameraModel,
    uncertainty=None,
    include_background: bool = False,
) -> PartPointCloud:
    """Back-project labelled pixels with valid depth into world coordinates.

    Points are grouped by part label; within a part they follow row-major
    pixel order.  Background pixels are dropped unless ``include_background``
    is set (the whole-scene downsampler needs them).  ``uncertainty`` is an
    optional map whose per-pixel scores get attached to the lifted points.
    """
    if depth.values.shape != seg.labels.shape:
        raise InputError(
            f"depth raster {depth.values.shape} and label raster "
            f"{seg.labels.shape} must have matching shapes"
        )
    unc_values = None
    if uncertainty is not None:
        unc_values = np.asarray(getattr(uncertainty, "values", uncertainty), dtype=float)
        if unc_values.shape != depth.values.shape:
            raise InputError("uncertainty raster shape must match the depth raster")

    height, width = depth.values.shape
    valid = depth.valid_mask()
    flat_labels = seg.labels.reshape(-1)
    flat_depth = depth.values.reshape(-1)
    flat_valid = valid.reshape(-1)

    parts: dict[int, PartPoints] = {}
    for label in np.unique(seg.labels):
        c = int(label)
        if c == BACKGROUND and not include_background:
            continue
        pixels = np.flatnonzero((flat_labels == c) & flat_valid)
        d = flat_depth[pixels]
        u = (pixels % width).astype(float)
        v = (pixels // width).astype(float)
        x = (u - cam.cx) * d / cam.fx
        y = (v - cam.cy) * d / cam.fy
        pts_cam = np.column_stack([x, y, d])
        pts_world = pts_cam @ cam.rotation.T + cam.translation
        unc = unc_values.reshape(-1)[pixels] if unc_values is not None else np.zeros(len(pixels))
        parts[c] = PartPoints(points=pts_world, uncertainty=unc, pixels=pixels)
    return PartPointCloud(parts=parts, width=width, height=height)


def project_to_pixels(cam: CameraModel, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project world points through the camera; returns (u, v, depth).

    Inverse of the lift for points in front of the camera, used for
    round-trip checks and visibility reasoning.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    pts_cam = (pts - cam.translation) @ cam.rotation
    z = pts_cam[:, 2]
    if np.any(z <= 0):
        raise InputError("cannot project points at or behind the camera plane")
    u = pts_cam[:, 0] * cam.fx / z + cam.cx
    v = pts_cam[:, 1] * cam.fy / z + cam.cy
    return u, v, z
