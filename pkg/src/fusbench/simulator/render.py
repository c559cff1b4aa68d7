"""Ray-cast rendering of a scene into depth and ground-truth label rasters.

One ray is cast per pixel through the same (u, v) sample position the lift
uses, with unit z in the camera frame, so the hit parameter equals the
camera-space depth directly.  The nearest hit wins; table hits keep the
background label, and pixels with no hit (or a hit beyond the render range)
get depth 0, which the depth raster treats as invalid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import CameraModel, DepthMap, SegmentationMap
from ..geometry import invert_pose
from .primitives import Plane
from .scene import SceneSpec, part_geometry


@dataclass
class RenderedFrame:
    """Clean (noise-free) output of the renderer for one frame."""

    depth: DepthMap
    seg: SegmentationMap
    cam: CameraModel
    poses: dict[int, np.ndarray]


def render_frame(spec: SceneSpec, frame: int) -> RenderedFrame:
    if frame < 0 or frame >= spec.frames:
        raise IndexError(f"frame {frame} outside [0, {spec.frames})")
    cam = spec.camera(frame)
    height, width = spec.height, spec.width
    u, v = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float))
    dirs_cam = np.column_stack(
        [
            ((u - cam.cx) / cam.fx).ravel(),
            ((v - cam.cy) / cam.fy).ravel(),
            np.ones(width * height),
        ]
    )
    dirs_world = dirs_cam @ cam.rotation.T
    origin = cam.translation

    nearest = Plane(spec.z_table).intersect(origin, dirs_world)
    labels = np.zeros(width * height, dtype=np.int32)

    geometry = part_geometry(spec)
    poses = {}
    for part in sorted(geometry):
        pose = spec.part_pose(part, frame)
        poses[part] = pose
        for prim, prim_pose in geometry[part]:
            inv = invert_pose(pose @ prim_pose)
            local_origin = inv[:3, :3] @ origin + inv[:3, 3]
            local_dirs = dirs_world @ inv[:3, :3].T
            t = prim.intersect(local_origin, local_dirs)
            closer = t < nearest
            nearest[closer] = t[closer]
            labels[closer] = part

    visible = np.isfinite(nearest) & (nearest <= spec.max_render_depth)
    depth_values = np.where(visible, nearest, 0.0).reshape(height, width)
    labels = np.where(visible, labels, 0).reshape(height, width)
    return RenderedFrame(
        depth=DepthMap(values=depth_values),
        seg=SegmentationMap(labels=labels.astype(np.int32), num_classes=spec.num_classes),
        cam=cam,
        poses=poses,
    )
