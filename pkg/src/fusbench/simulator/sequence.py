"""Sequence generation and the on-disk sequence directory layout.

A generated sequence directory contains:

* ``manifest.json``: scene and noise parameters, seeds, frame count, part
  name-to-id map, everything needed to regenerate the data bit for bit,
* ``depth/NNNN.bin``: noisy float32 depth rasters,
* ``gt/NNNN.bin``: uint8 ground-truth label rasters,
* ``prob/NNNN.bin``: float32 probability stacks (K, C, H, W),
* ``cam/NNNN.json``: intrinsics and camera-to-world extrinsics,
* ``xform/NNNN.json``: per-part rigid poses (rest frame to world),
* ``ref/part_N.ply``: dense ground-truth part surface clouds at frame 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..core import CameraModel, DepthMap, InputError, ProbabilityStack, SegmentationMap
from ..io import (
    read_json,
    read_ply,
    read_raster_f32,
    read_raster_u8,
    read_prob_stack,
    write_json,
    write_ply,
    write_raster_f32,
    write_raster_u8,
    write_prob_stack,
)
from .noise import NoiseSpec, corrupt
from .render import RenderedFrame, render_frame
from .scene import SceneSpec, reference_cloud

MANIFEST_FORMAT = 1


@dataclass
class FrameRecord:
    """One observed frame: noisy sensor data plus ground truth."""

    depth: DepthMap
    stack: ProbabilityStack
    cam: CameraModel
    gt: SegmentationMap
    poses: dict[int, np.ndarray]
    clean_depth: DepthMap | None = None


@dataclass
class SceneSequence:
    """A generated (or loaded) sequence with ground truth and references."""

    manifest: dict
    frames: list[FrameRecord]
    references: dict[int, np.ndarray]
    spec: SceneSpec | None = None
    noise: NoiseSpec | None = None

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def num_classes(self) -> int:
        return int(self.manifest["num_classes"])

    @property
    def table_height(self) -> float:
        return float(self.manifest["z_table"])

    def part_ids(self) -> list[int]:
        return sorted(int(v) for v in self.manifest["parts"].values())


def render_all(spec: SceneSpec) -> list[RenderedFrame]:
    return [render_frame(spec, f) for f in range(spec.frames)]


def generate_sequence(
    spec: SceneSpec,
    noise: NoiseSpec,
    num_inferences: int = 4,
    noise_seed: int | None = None,
    clean_frames: list[RenderedFrame] | None = None,
) -> SceneSequence:
    """Render a scene and corrupt it into an observed sequence.

    ``noise_seed`` defaults to the scene seed; passing different values (and
    optionally pre-rendered ``clean_frames``) re-draws the corruption while
    keeping the geometry fixed, which is how benchmark repeats are produced.
    """
    noise_seed = spec.seed if noise_seed is None else int(noise_seed)
    if clean_frames is None:
        clean_frames = render_all(spec)
    if len(clean_frames) != spec.frames:
        raise InputError("clean_frames must cover every frame of the scene")

    frames = []
    for f, clean in enumerate(clean_frames):
        depth, stack = corrupt(clean, noise, num_inferences, noise_seed, f)
        frames.append(
            FrameRecord(
                depth=depth,
                stack=stack,
                cam=clean.cam,
                gt=clean.seg,
                poses=dict(clean.poses),
                clean_depth=clean.depth,
            )
        )
    references = {part: reference_cloud(spec, part) for part in spec.part_ids()}
    manifest = {
        "format_version": MANIFEST_FORMAT,
        "tool_version": __version__,
        "kind": spec.kind,
        "seed": spec.seed,
        "noise_seed": noise_seed,
        "frames": spec.frames,
        "width": spec.width,
        "height": spec.height,
        "num_inferences": num_inferences,
        "num_classes": spec.num_classes,
        "parts": dict(spec.parts),
        "z_table": spec.z_table,
        "scene": spec.to_dict(),
        "noise": noise.to_dict(),
    }
    return SceneSequence(manifest=manifest, frames=frames, references=references,
                         spec=spec, noise=noise)


def write_sequence(seq: SceneSequence, directory) -> Path:
    directory = Path(directory)
    for sub in ("depth", "gt", "prob", "cam", "xform", "ref"):
        (directory / sub).mkdir(parents=True, exist_ok=True)
    for f, record in enumerate(seq.frames):
        stem = f"{f:04d}"
        write_raster_f32(directory / "depth" / f"{stem}.bin", record.depth.values)
        write_raster_u8(directory / "gt" / f"{stem}.bin", record.gt.labels)
        write_prob_stack(directory / "prob" / f"{stem}.bin", record.stack.probs)
        write_json(
            directory / "cam" / f"{stem}.json",
            {
                "fx": record.cam.fx,
                "fy": record.cam.fy,
                "cx": record.cam.cx,
                "cy": record.cam.cy,
                "rotation": record.cam.rotation.tolist(),
                "translation": record.cam.translation.tolist(),
            },
        )
        write_json(
            directory / "xform" / f"{stem}.json",
            {str(part): pose.tolist() for part, pose in sorted(record.poses.items())},
        )
    for part, points in sorted(seq.references.items()):
        write_ply(
            directory / "ref" / f"part_{part}.ply",
            points,
            np.full(len(points), part),
            np.zeros(len(points)),
            scalar_name="uncertainty",
        )
    write_json(directory / "manifest.json", seq.manifest)
    return directory


def load_sequence(directory) -> SceneSequence:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"{directory}: not a sequence directory (missing manifest.json)")
    manifest = read_json(manifest_path)
    for key in ("frames", "num_classes", "parts", "z_table", "noise"):
        if key not in manifest:
            raise InputError(f"{manifest_path}: manifest is missing the {key!r} field")
    noise = NoiseSpec.from_dict(manifest["noise"])
    spec = SceneSpec.from_dict(manifest["scene"]) if "scene" in manifest else None
    num_classes = int(manifest["num_classes"])

    frames = []
    for f in range(int(manifest["frames"])):
        stem = f"{f:04d}"
        depth = DepthMap(
            values=read_raster_f32(directory / "depth" / f"{stem}.bin"),
            max_range=noise.depth_max_range,
        )
        gt = SegmentationMap(
            labels=read_raster_u8(directory / "gt" / f"{stem}.bin"),
            num_classes=num_classes,
        )
        stack = ProbabilityStack(probs=read_prob_stack(directory / "prob" / f"{stem}.bin"))
        cam_payload = read_json(directory / "cam" / f"{stem}.json")
        cam = CameraModel(
            fx=cam_payload["fx"],
            fy=cam_payload["fy"],
            cx=cam_payload["cx"],
            cy=cam_payload["cy"],
            rotation=np.array(cam_payload["rotation"]),
            translation=np.array(cam_payload["translation"]),
        )
        poses_payload = read_json(directory / "xform" / f"{stem}.json")
        poses = {int(part): np.array(pose) for part, pose in poses_payload.items()}
        frames.append(FrameRecord(depth=depth, stack=stack, cam=cam, gt=gt, poses=poses))

    references = {}
    for part in sorted(int(v) for v in manifest["parts"].values()):
        payload = read_ply(directory / "ref" / f"part_{part}.ply")
        references[part] = payload["points"]
    return SceneSequence(manifest=manifest, frames=frames, references=references,
                         spec=spec, noise=noise)
