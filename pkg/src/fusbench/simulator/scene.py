"""Procedural articulated scenes: a door, a drawer, or a faucet on a table.

Scenes live in a z-up world with the table at z = z_table and the object in
front of the camera (object front face in the y = 0 plane, camera on the
negative-y side).  Each part is a small set of analytic primitives in the
object's rest frame plus a per-frame rigid pose driven by one joint:

* door:   base cabinet (static), facade hinged about a vertical edge, and a
          vertical handle bar riding on the facade,
* drawer: base cabinet (static), facade sliding out toward the camera, and a
          horizontal handle bar riding on the facade,
* faucet: cylindrical base (static) and a horizontal handle bar rotating
          about the base axis.

The camera trajectory approaches the handle: the eye tracks the handle's
current position at a shrinking offset and always looks at it, mimicking a
hand-mounted camera closing in for a grasp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import CameraModel, InputError
from ..geometry import (
    identity_pose,
    look_at,
    make_pose,
    rotation_about_line,
    rotation_x,
    rotation_y,
    translation_pose,
)
from .primitives import Box, Cylinder, surface_grid_box, surface_grid_cylinder

KINDS = ("door", "drawer", "faucet")

PART_SETS = {
    "door": {"base": 1, "facade": 2, "handle": 3},
    "drawer": {"base": 1, "facade": 2, "handle": 3},
    "faucet": {"base": 1, "handle": 2},
}

# Stream tag for scene-building draws; noise tags live in noise.py.
_TAG_SCENE = 11

DEFAULT_WIDTH = 256
DEFAULT_HEIGHT = 144
DEFAULT_FOCAL = 180.0


@dataclass
class SceneSpec:
    """A fully resolved scene: geometry, articulation, and camera path."""

    kind: str
    seed: int
    frames: int
    dims: dict[str, float]
    joint: np.ndarray
    camera_eyes: np.ndarray
    camera_targets: np.ndarray
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    fx: float = DEFAULT_FOCAL
    fy: float = DEFAULT_FOCAL
    z_table: float = 0.0
    max_render_depth: float = 10.0
    ref_spacing: float = 0.005

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown scene kind {self.kind!r}; expected one of {KINDS}")
        if self.frames < 1:
            raise InputError("a scene needs at least one frame")
        self.joint = np.asarray(self.joint, dtype=float).reshape(-1)
        self.camera_eyes = np.asarray(self.camera_eyes, dtype=float).reshape(-1, 3)
        self.camera_targets = np.asarray(self.camera_targets, dtype=float).reshape(-1, 3)
        if not (len(self.joint) == len(self.camera_eyes) == len(self.camera_targets) == self.frames):
            raise InputError("joint and camera trajectories must cover every frame")

    @property
    def parts(self) -> dict[str, int]:
        return dict(PART_SETS[self.kind])

    @property
    def num_classes(self) -> int:
        """Class count including background."""
        return len(PART_SETS[self.kind]) + 1

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.height - 1) / 2.0

    def part_ids(self) -> list[int]:
        return sorted(PART_SETS[self.kind].values())

    def camera(self, frame: int) -> CameraModel:
        rotation, translation = look_at(self.camera_eyes[frame], self.camera_targets[frame])
        return CameraModel(
            fx=self.fx, fy=self.fy, cx=self.cx, cy=self.cy,
            rotation=rotation, translation=translation,
        )

    def part_pose(self, part: int, frame: int) -> np.ndarray:
        """Rigid pose of a part at a frame (rest frame to world)."""
        value = float(self.joint[frame])
        names = {v: k for k, v in PART_SETS[self.kind].items()}
        if part not in names:
            raise InputError(f"scene kind {self.kind!r} has no part {part}")
        name = names[part]
        if name == "base":
            return identity_pose()
        d = self.dims
        if self.kind == "door":
            # Swing toward the camera (-y): positive joint angle about the
            # hinge edge, sign flipped with the hinge side.
            hinge_x = d["hinge_side"] * d["facade_width"] / 2.0
            return rotation_about_line((0.0, 0.0, 1.0), (hinge_x, 0.0, 0.0), d["hinge_side"] * value)
        if self.kind == "drawer":
            return translation_pose((0.0, -value, 0.0))
        # faucet handle swings about the base axis
        return rotation_about_line((0.0, 0.0, 1.0), (0.0, 0.0, 0.0), value)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "frames": self.frames,
            "dims": {k: self.dims[k] for k in sorted(self.dims)},
            "joint": self.joint.tolist(),
            "camera_eyes": self.camera_eyes.tolist(),
            "camera_targets": self.camera_targets.tolist(),
            "width": self.width,
            "height": self.height,
            "fx": self.fx,
            "fy": self.fy,
            "z_table": self.z_table,
            "max_render_depth": self.max_render_depth,
            "ref_spacing": self.ref_spacing,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SceneSpec":
        known = {
            "kind", "seed", "frames", "dims", "joint", "camera_eyes", "camera_targets",
            "width", "height", "fx", "fy", "z_table", "max_render_depth", "ref_spacing",
        }
        unknown = sorted(set(payload) - known)
        if unknown:
            raise InputError(f"unknown scene keys: {', '.join(unknown)}")
        return cls(**payload)


def build_scene(kind: str, seed: int, frames: int = 20, overrides: dict | None = None) -> SceneSpec:
    """Draw a randomized scene of the given kind.

    Dimensions are drawn from plausible ranges with a generator keyed by
    (seed, scene tag); ``overrides`` replaces drawn values afterwards, so an
    override never shifts the remaining draws.  Unknown override keys are
    rejected.
    """
    if kind not in KINDS:
        raise InputError(f"unknown scene kind {kind!r}; expected one of {KINDS}")
    if frames < 1:
        raise InputError("a scene needs at least one frame")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), _TAG_SCENE)))
    if kind == "door":
        dims = {
            "facade_width": rng.uniform(0.3, 0.8),
            "facade_height": rng.uniform(0.3, 0.8),
            "facade_thickness": rng.uniform(0.015, 0.025),
            "base_depth": rng.uniform(0.25, 0.4),
            "handle_length": rng.uniform(0.02, 0.10),
            "handle_radius": rng.uniform(0.008, 0.012),
            "handle_standoff": rng.uniform(0.035, 0.06),
            "handle_frac": rng.uniform(0.4, 0.6),
            "hinge_side": -1.0 if rng.random() < 0.5 else 1.0,
            "max_joint": rng.uniform(np.radians(25), np.radians(45)),
            "cam_dist_start": rng.uniform(0.5, 0.75),
            "cam_dist_end": rng.uniform(0.26, 0.34),
            "cam_lateral": rng.uniform(-0.15, 0.15),
            "cam_height": rng.uniform(0.05, 0.2),
        }
    elif kind == "drawer":
        dims = {
            "facade_width": rng.uniform(0.35, 0.7),
            "facade_height": rng.uniform(0.15, 0.3),
            "facade_thickness": rng.uniform(0.015, 0.025),
            "base_depth": rng.uniform(0.3, 0.5),
            "handle_length": rng.uniform(0.02, 0.10),
            "handle_radius": rng.uniform(0.008, 0.012),
            "handle_standoff": rng.uniform(0.035, 0.06),
            "handle_frac": rng.uniform(0.45, 0.55),
            "max_joint": rng.uniform(0.15, 0.3),
            "cam_dist_start": rng.uniform(0.5, 0.75),
            "cam_dist_end": rng.uniform(0.26, 0.34),
            "cam_lateral": rng.uniform(-0.15, 0.15),
            "cam_height": rng.uniform(0.05, 0.2),
        }
    else:
        dims = {
            "base_radius": rng.uniform(0.04, 0.07),
            "base_height": rng.uniform(0.10, 0.20),
            "handle_length": rng.uniform(0.05, 0.15),
            "handle_radius": rng.uniform(0.008, 0.015),
            "max_joint": rng.uniform(np.radians(40), np.radians(90)),
            "cam_dist_start": rng.uniform(0.45, 0.65),
            "cam_dist_end": rng.uniform(0.24, 0.30),
            "cam_lateral": rng.uniform(-0.12, 0.12),
            "cam_height": rng.uniform(0.10, 0.25),
        }
    if overrides:
        unknown = sorted(set(overrides) - set(dims))
        if unknown:
            raise InputError(f"unknown scene dimension overrides: {', '.join(unknown)}")
        dims.update({k: float(v) for k, v in overrides.items()})

    joint = _joint_trajectory(frames, dims["max_joint"])
    spec = SceneSpec(
        kind=kind, seed=int(seed), frames=frames, dims=dims,
        joint=joint,
        camera_eyes=np.zeros((frames, 3)),
        camera_targets=np.zeros((frames, 3)),
    )
    eyes, targets = _camera_path(spec)
    spec.camera_eyes = eyes
    spec.camera_targets = targets
    return spec


def _joint_trajectory(frames: int, max_joint: float) -> np.ndarray:
    """Hold at rest for the first third, then ramp linearly to the limit."""
    joint = np.zeros(frames)
    start = frames // 3
    if frames - 1 > start:
        ramp = np.linspace(0.0, max_joint, frames - start)
        joint[start:] = ramp
    elif frames > 1:
        joint[-1] = max_joint
    return joint


def _handle_center_rest(spec: SceneSpec) -> np.ndarray:
    d = spec.dims
    if spec.kind == "door":
        x = -d["hinge_side"] * (d["facade_width"] / 2.0 - _handle_edge_margin(d))
        return np.array([x, -d["handle_standoff"], d["handle_frac"] * d["facade_height"]])
    if spec.kind == "drawer":
        return np.array([0.0, -d["handle_standoff"], d["handle_frac"] * d["facade_height"]])
    return np.array([0.0, -d["handle_length"] / 2.0, d["base_height"] + d["handle_radius"]])


def _handle_edge_margin(dims: dict) -> float:
    return 0.05 * dims["facade_width"] + 0.03


def handle_center(spec: SceneSpec, frame: int) -> np.ndarray:
    """World position of the handle's centre at a frame."""
    handle_id = PART_SETS[spec.kind]["handle"]
    pose = spec.part_pose(handle_id, frame)
    rest = _handle_center_rest(spec)
    return pose[:3, :3] @ rest + pose[:3, 3]


def _camera_path(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    d = spec.dims
    frames = spec.frames
    eyes = np.zeros((frames, 3))
    targets = np.zeros((frames, 3))
    for f in range(frames):
        s = f / (frames - 1) if frames > 1 else 0.0
        dist = d["cam_dist_start"] * (1 - s) + d["cam_dist_end"] * s
        lateral = d["cam_lateral"] * (1 - 0.7 * s)
        height = d["cam_height"] * (1 - 0.5 * s)
        target = handle_center(spec, f)
        eyes[f] = target + np.array([lateral, -dist, height])
        targets[f] = target
    return eyes, targets


def part_geometry(spec: SceneSpec) -> dict[int, list[tuple[object, np.ndarray]]]:
    """Rest-frame primitives per part id, each with its local placement pose."""
    d = spec.dims
    parts = PART_SETS[spec.kind]
    if spec.kind in ("door", "drawer"):
        w, h, t = d["facade_width"], d["facade_height"], d["facade_thickness"]
        base = Box(lo=(-w / 2, t, 0.0), hi=(w / 2, t + d["base_depth"], h))
        facade = Box(lo=(-w / 2, 0.0, 0.0), hi=(w / 2, t, h))
        handle_rest = _handle_center_rest(spec)
        bar = Cylinder(radius=d["handle_radius"], height=d["handle_length"])
        if spec.kind == "door":
            # vertical bar: cylinder axis stays on z
            bar_pose = translation_pose(handle_rest - np.array([0.0, 0.0, d["handle_length"] / 2]))
        else:
            # horizontal bar along x: rotate the cylinder axis onto +x
            bar_pose = make_pose(
                rotation_y(np.pi / 2),
                handle_rest - np.array([d["handle_length"] / 2, 0.0, 0.0]),
            )
        return {
            parts["base"]: [(base, identity_pose())],
            parts["facade"]: [(facade, identity_pose())],
            parts["handle"]: [(bar, bar_pose)],
        }
    base = Cylinder(radius=d["base_radius"], height=d["base_height"])
    bar = Cylinder(radius=d["handle_radius"], height=d["handle_length"])
    # horizontal bar pointing toward the camera (-y) from the top of the base
    bar_pose = make_pose(rotation_x(np.pi / 2), (0.0, 0.0, d["base_height"] + d["handle_radius"]))
    return {
        parts["base"]: [(base, identity_pose())],
        parts["handle"]: [(bar, bar_pose)],
    }


def reference_cloud(spec: SceneSpec, part: int, spacing: float | None = None) -> np.ndarray:
    """Dense ground-truth surface cloud for a part, in world frame at frame 0."""
    spacing = spec.ref_spacing if spacing is None else spacing
    geometry = part_geometry(spec)
    if part not in geometry:
        raise InputError(f"scene kind {spec.kind!r} has no part {part}")
    pose0 = spec.part_pose(part, 0)
    blocks = []
    for prim, prim_pose in geometry[part]:
        if isinstance(prim, Box):
            pts = surface_grid_box(prim.lo, prim.hi, spacing)
        else:
            pts = surface_grid_cylinder(prim.radius, prim.height, spacing)
        full = pose0 @ prim_pose
        blocks.append(pts @ full[:3, :3].T + full[:3, 3])
    return np.concatenate(blocks, axis=0)
