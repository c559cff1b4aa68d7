"""Synthetic articulated RGB-D scenes with ground truth."""

from .noise import NoiseSpec, corrupt
from .primitives import Box, Cylinder, Plane
from .render import RenderedFrame, render_frame
from .scene import KINDS, PART_SETS, SceneSpec, build_scene, handle_center, part_geometry, reference_cloud
from .sequence import (
    FrameRecord,
    SceneSequence,
    generate_sequence,
    load_sequence,
    render_all,
    write_sequence,
)

__all__ = [
    "Box",
    "Cylinder",
    "Plane",
    "FrameRecord",
    "KINDS",
    "NoiseSpec",
    "PART_SETS",
    "RenderedFrame",
    "SceneSequence",
    "SceneSpec",
    "build_scene",
    "corrupt",
    "generate_sequence",
    "handle_center",
    "load_sequence",
    "part_geometry",
    "reference_cloud",
    "render_all",
    "render_frame",
    "write_sequence",
]
