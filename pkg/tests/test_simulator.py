"""Synthetic articulated scenes: primitives, rendering, corruption, disk layout."""

import json
import hashlib
from pathlib import Path

import numpy as np
import pytest

from fusbench.core import InputError, lift_to_world
from fusbench.distances import nearest_distances
from fusbench.simulator.noise import NoiseSpec, corrupt
from fusbench.simulator.primitives import (
    Box,
    Cylinder,
    Plane,
    surface_grid_box,
    surface_grid_cylinder,
)
from fusbench.simulator.render import render_frame
from fusbench.simulator.scene import (
    KINDS,
    PART_SETS,
    SceneSpec,
    build_scene,
    handle_center,
    reference_cloud,
)
from fusbench.simulator.sequence import generate_sequence, load_sequence, write_sequence

from conftest import CLEAN_NOISE


# -------------------------------------------------------------- primitives --


def test_box_ray_hits_near_face():
    box = Box(lo=(-1, 2, -1), hi=(1, 3, 1))
    o = np.zeros(3)
    d = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])
    t = box.intersect(o, d)
    assert t[0] == 2.0
    assert np.isinf(t[1]) and np.isinf(t[2])


def test_box_t_is_in_direction_units():
    # unnormalized directions: t scales inversely with |d|
    box = Box(lo=(-1, 2, -1), hi=(1, 3, 1))
    t = box.intersect(np.zeros(3), np.array([[0.0, 2.0, 0.0]]))
    assert t[0] == 1.0


def test_box_ray_from_inside_exits_far_face():
    box = Box(lo=(-1, -1, -1), hi=(1, 1, 1))
    t = box.intersect(np.zeros(3), np.array([[0.0, 1.0, 0.0]]))
    assert t[0] == 1.0


def test_cylinder_side_cap_and_miss():
    cyl = Cylinder(radius=1.0, height=2.0)
    side = cyl.intersect(np.array([0.0, -5.0, 1.0]), np.array([[0.0, 1.0, 0.0]]))
    assert side[0] == pytest.approx(4.0)
    cap = cyl.intersect(np.array([0.0, 0.0, 5.0]), np.array([[0.0, 0.0, -1.0]]))
    assert cap[0] == pytest.approx(3.0)
    miss = cyl.intersect(np.array([0.0, -5.0, 3.0]), np.array([[0.0, 1.0, 0.0]]))
    assert np.isinf(miss[0])


def test_plane_intersection():
    plane = Plane(height=0.0)
    t = plane.intersect(np.array([0.0, 0.0, 1.0]),
                        np.array([[0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]))
    assert t[0] == 1.0
    assert np.isinf(t[1])


def test_surface_grids_lie_on_the_surface():
    pts = surface_grid_box((0, 0, 0), (1, 1, 1), spacing=0.5)
    assert len(pts) == 6 * 9  # three ticks per axis, six faces
    on_face = np.isclose(pts, 0.0) | np.isclose(pts, 1.0)
    assert on_face.any(axis=1).all()
    cyl = surface_grid_cylinder(radius=0.5, height=1.0, spacing=0.1)
    r = np.sqrt(cyl[:, 0] ** 2 + cyl[:, 1] ** 2)
    assert np.all(r <= 0.5 + 1e-9)
    assert np.all((cyl[:, 2] >= 0) & (cyl[:, 2] <= 1.0))
    on_side = np.isclose(r, 0.5)
    on_cap = np.isclose(cyl[:, 2], 0.0) | np.isclose(cyl[:, 2], 1.0)
    assert np.all(on_side | on_cap)


# ------------------------------------------------------------------ scenes --


def test_part_sets_per_kind():
    assert KINDS == ("door", "drawer", "faucet")
    assert PART_SETS["door"] == {"base": 1, "facade": 2, "handle": 3}
    assert PART_SETS["drawer"] == {"base": 1, "facade": 2, "handle": 3}
    assert PART_SETS["faucet"] == {"base": 1, "handle": 2}
    assert build_scene("door", 0, frames=2).num_classes == 4
    assert build_scene("faucet", 0, frames=2).num_classes == 3


def test_build_scene_deterministic_and_seed_sensitive():
    a = build_scene("drawer", 7, frames=3).to_dict()
    b = build_scene("drawer", 7, frames=3).to_dict()
    assert a == b
    c = build_scene("drawer", 8, frames=3).to_dict()
    assert a["dims"] != c["dims"]


def test_build_scene_overrides_replace_without_shifting_draws():
    plain = build_scene("door", 3, frames=2)
    tweaked = build_scene("door", 3, frames=2, overrides={"handle_length": 0.02})
    assert tweaked.dims["handle_length"] == 0.02
    for key, value in plain.dims.items():
        if key != "handle_length":
            assert tweaked.dims[key] == value
    with pytest.raises(InputError) as err:
        build_scene("door", 3, frames=2, overrides={"handel_length": 0.02})
    assert "handel_length" in str(err.value)


def test_build_scene_rejects_unknown_kind():
    with pytest.raises(InputError):
        build_scene("window", 0)


def test_joint_holds_then_ramps_to_limit():
    spec = build_scene("door", 5, frames=9)
    third = 9 // 3
    assert np.all(spec.joint[:third] == 0.0)
    assert spec.joint[-1] == spec.dims["max_joint"]
    assert np.all(np.diff(spec.joint) >= 0)


def test_camera_always_targets_the_handle():
    spec = build_scene("faucet", 2, frames=4)
    for f in range(4):
        assert np.allclose(spec.camera_targets[f], handle_center(spec, f))
    # the eye closes in on the handle over the sequence
    dist = np.linalg.norm(spec.camera_eyes - spec.camera_targets, axis=1)
    assert dist[-1] < dist[0]


def test_base_is_static_and_hinge_edge_is_fixed():
    spec = build_scene("door", 4, frames=6)
    assert np.array_equal(spec.part_pose(1, 5), np.eye(4))
    hinge_x = spec.dims["hinge_side"] * spec.dims["facade_width"] / 2.0
    edge = np.array([hinge_x, 0.0, 0.3])
    pose = spec.part_pose(2, 5)
    assert np.allclose(pose[:3, :3] @ edge + pose[:3, 3], edge)
    assert spec.joint[5] > 0  # the facade really moved
    moved = np.array([-hinge_x, 0.0, 0.3])
    assert not np.allclose(pose[:3, :3] @ moved + pose[:3, 3], moved)


def test_drawer_slides_toward_camera():
    spec = build_scene("drawer", 4, frames=6)
    pose = spec.part_pose(2, 5)
    assert pose[1, 3] == -spec.joint[5]
    assert np.array_equal(pose[:3, :3], np.eye(3))


def test_scene_spec_round_trip_and_unknown_keys():
    spec = build_scene("faucet", 1, frames=2)
    clone = SceneSpec.from_dict(spec.to_dict())
    assert clone.to_dict() == spec.to_dict()
    bad = spec.to_dict()
    bad["extra"] = 1
    with pytest.raises(InputError) as err:
        SceneSpec.from_dict(bad)
    assert "extra" in str(err.value)


def test_part_pose_unknown_part():
    spec = build_scene("faucet", 1, frames=2)
    with pytest.raises(InputError):
        spec.part_pose(3, 0)


# --------------------------------------------------------------- rendering --


def test_render_center_pixel_sees_the_handle_up_close():
    spec = build_scene("door", 6, frames=3)
    rendered = render_frame(spec, 0)
    h, w = rendered.depth.values.shape
    assert (h, w) == (spec.height, spec.width)
    center = rendered.depth.values[h // 2, w // 2]
    eye_dist = np.linalg.norm(spec.camera_eyes[0] - spec.camera_targets[0])
    assert 0 < center <= eye_dist
    assert center > eye_dist - 0.2


def test_render_labels_cover_all_parts():
    spec = build_scene("door", 6, frames=3)
    # closed door: the facade hides the cabinet base
    assert {2, 3} <= set(np.unique(render_frame(spec, 0).seg.labels).tolist())
    # fully open door: the base shows behind the swung facade
    present = set(np.unique(render_frame(spec, 2).seg.labels).tolist())
    assert {1, 2, 3} <= present


def test_render_table_keeps_background_label():
    spec = build_scene("door", 6, frames=3)
    rendered = render_frame(spec, 0)
    background = rendered.seg.labels == 0
    # some background pixels have valid depth: those are table hits
    assert (background & (rendered.depth.values > 0)).any()


def test_render_is_deterministic():
    spec = build_scene("faucet", 9, frames=2)
    a, b = render_frame(spec, 1), render_frame(spec, 1)
    assert np.array_equal(a.depth.values, b.depth.values)
    assert np.array_equal(a.seg.labels, b.seg.labels)


def test_render_rejects_out_of_range_frame():
    spec = build_scene("faucet", 9, frames=2)
    with pytest.raises(IndexError):
        render_frame(spec, 2)


def test_lifted_clean_render_lands_on_reference_surfaces():
    # lifting the clean depth through the camera must reproduce the analytic
    # part surfaces: every lifted handle point sits within a couple of grid
    # spacings of the dense reference cloud
    spec = build_scene("door", 6, frames=3)
    rendered = render_frame(spec, 0)
    cloud = lift_to_world(rendered.depth, rendered.seg, rendered.cam)
    handle = PART_SETS["door"]["handle"]
    ref = reference_cloud(spec, handle)
    d = nearest_distances(cloud.parts[handle].points, ref)
    assert d.max() < 2 * spec.ref_spacing


# ------------------------------------------------------------------- noise --


def test_zero_noise_reproduces_ground_truth_exactly():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    depth, stack = corrupt(rendered, NoiseSpec(**CLEAN_NOISE), 3, seed=11, frame=0)
    assert np.array_equal(depth.values, rendered.depth.values)
    onehot = np.zeros((spec.num_classes,) + rendered.seg.labels.shape)
    flat = rendered.seg.labels.reshape(-1)
    onehot.reshape(spec.num_classes, -1)[flat, np.arange(flat.size)] = 1.0
    for k in range(3):
        assert np.array_equal(stack.probs[k], onehot)


def test_salt_pepper_pixels_read_back_invalid():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec(**{**CLEAN_NOISE, "salt_pepper_rate": 0.2})
    depth, _ = corrupt(rendered, noise, 1, seed=11, frame=0)
    changed = depth.values != rendered.depth.values
    rate = changed.mean()
    assert 0.15 < rate < 0.25
    assert not depth.valid_mask()[changed].any()  # zeroed or saturated
    assert set(np.unique(depth.values[changed]).tolist()) <= {0.0, noise.depth_max_range}


def test_depth_noise_only_touches_valid_pixels():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec(**{**CLEAN_NOISE, "depth_sigma": 0.01})
    depth, _ = corrupt(rendered, noise, 1, seed=11, frame=0)
    invalid = rendered.depth.values == 0
    assert np.array_equal(depth.values[invalid], rendered.depth.values[invalid])
    valid = ~invalid
    delta = depth.values[valid] - rendered.depth.values[valid]
    assert delta.std() == pytest.approx(0.01, rel=0.1)


def test_blobs_relabel_compact_disks_to_the_target_part():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec(**{**CLEAN_NOISE, "blob_rate": 2.0, "blob_target": 3,
                         "blob_placement": "adjacent", "blob_jitter_px": 0})
    _, stack = corrupt(rendered, noise, 2, seed=11, frame=0)
    labels = np.argmax(stack.probs[0], axis=0)
    changed = labels != rendered.seg.labels
    assert changed.any()
    assert np.all(labels[changed] == 3)
    # persistent across the K inferences when jitter is off
    assert np.array_equal(stack.probs[0], stack.probs[1])
    # adjacency: every blob pixel is near the true part-3 region
    handle_pts = np.argwhere(rendered.seg.labels == 3)
    blob_pts = np.argwhere(changed)
    d = nearest_distances(
        np.column_stack([blob_pts, np.zeros(len(blob_pts))]).astype(float),
        np.column_stack([handle_pts, np.zeros(len(handle_pts))]).astype(float),
    )
    assert d.max() <= 2 * noise.blob_radius_px[1] + 2.0


def test_boundary_jitter_stays_inside_the_band():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec(**{**CLEAN_NOISE, "boundary_jitter_px": 1, "boundary_flip_prob": 1.0})
    _, stack = corrupt(rendered, noise, 2, seed=11, frame=0)
    gt = rendered.seg.labels
    boundary = np.zeros(gt.shape, dtype=bool)
    boundary[:-1, :] |= gt[:-1, :] != gt[1:, :]
    boundary[1:, :] |= gt[1:, :] != gt[:-1, :]
    boundary[:, :-1] |= gt[:, :-1] != gt[:, 1:]
    boundary[:, 1:] |= gt[:, 1:] != gt[:, :-1]
    for k in range(2):
        changed = np.argmax(stack.probs[k], axis=0) != gt
        assert changed.any()
        assert not (changed & ~boundary).any()
    # inferences flip independently
    assert not np.array_equal(stack.probs[0], stack.probs[1])


def test_logit_noise_spreads_probability_but_keeps_argmax():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec(**{**CLEAN_NOISE, "logit_sigma": 0.5})
    _, stack = corrupt(rendered, noise, 2, seed=11, frame=0)
    stack.validate()
    assert stack.probs.max() < 1.0
    assert np.array_equal(np.argmax(stack.probs[0], axis=0), rendered.seg.labels)


def test_corrupt_is_deterministic_per_seed():
    spec = build_scene("door", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec()
    d1, s1 = corrupt(rendered, noise, 2, seed=5, frame=1)
    d2, s2 = corrupt(rendered, noise, 2, seed=5, frame=1)
    assert np.array_equal(d1.values, d2.values)
    assert np.array_equal(s1.probs, s2.probs)
    d3, s3 = corrupt(rendered, noise, 2, seed=6, frame=1)
    assert not np.array_equal(d1.values, d3.values)


def test_noise_spec_validation_and_round_trip():
    spec = NoiseSpec(blob_radius_px=(2.0, 4.0))
    assert NoiseSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InputError):
        NoiseSpec(salt_pepper_rate=1.5)
    with pytest.raises(InputError):
        NoiseSpec(blob_radius_px=(5.0, 2.0))
    with pytest.raises(InputError):
        NoiseSpec(blob_placement="everywhere")
    with pytest.raises(InputError) as err:
        NoiseSpec.from_dict({"salt_rate": 0.1})
    assert "salt_rate" in str(err.value)


def test_blob_target_must_be_a_part():
    spec = build_scene("faucet", 11, frames=2)
    rendered = render_frame(spec, 0)
    noise = NoiseSpec(**{**CLEAN_NOISE, "blob_rate": 1.0, "blob_target": 3})
    with pytest.raises(InputError):
        corrupt(rendered, noise, 1, seed=0, frame=0)  # faucet has parts 1..2


# --------------------------------------------------------------- sequences --


def tree_digest(directory: Path) -> dict:
    out = {}
    for path in sorted(directory.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(directory))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_generate_sequence_shapes_and_manifest(door_sequence):
    seq = door_sequence
    assert len(seq) == 4
    record = seq.frames[0]
    assert record.stack.probs.shape == (3, 4, 144, 256)
    assert record.depth.values.shape == (144, 256)
    for key in ("format_version", "tool_version", "kind", "seed", "noise_seed",
                "frames", "num_inferences", "num_classes", "parts", "z_table",
                "scene", "noise"):
        assert key in seq.manifest
    assert seq.part_ids() == [1, 2, 3]
    assert set(seq.references) == {1, 2, 3}


def test_noise_seed_redraws_corruption_only(door_sequence):
    spec = SceneSpec.from_dict(door_sequence.manifest["scene"])
    other = generate_sequence(spec, NoiseSpec(), num_inferences=3, noise_seed=99)
    base = door_sequence.frames[1]
    redo = other.frames[1]
    assert np.array_equal(base.gt.labels, redo.gt.labels)
    assert np.array_equal(base.clean_depth.values, redo.clean_depth.values)
    assert not np.array_equal(base.depth.values, redo.depth.values)
    assert not np.array_equal(base.stack.probs, redo.stack.probs)


def test_sequence_write_load_round_trip(door_sequence, tmp_path):
    out = write_sequence(door_sequence, tmp_path / "seq")
    loaded = load_sequence(out)
    assert loaded.manifest == door_sequence.manifest
    for orig, back in zip(door_sequence.frames, loaded.frames):
        assert np.array_equal(back.depth.values, orig.depth.values.astype(np.float32))
        assert np.array_equal(back.gt.labels, orig.gt.labels)
        assert np.array_equal(back.stack.probs, orig.stack.probs.astype(np.float32))
        assert back.cam.fx == orig.cam.fx
        assert np.array_equal(back.cam.rotation, orig.cam.rotation)
        assert sorted(back.poses) == sorted(orig.poses)
        for part, pose in orig.poses.items():
            assert np.array_equal(back.poses[part], pose)
    for part, ref in door_sequence.references.items():
        assert np.allclose(loaded.references[part], ref, atol=1e-12)


def test_sequence_writes_are_byte_stable(door_sequence, tmp_path):
    a = write_sequence(door_sequence, tmp_path / "a")
    b = write_sequence(door_sequence, tmp_path / "b")
    assert tree_digest(a) == tree_digest(b)


def test_load_sequence_requires_manifest(tmp_path):
    with pytest.raises(InputError) as err:
        load_sequence(tmp_path)
    assert "manifest.json" in str(err.value)


def test_load_sequence_names_missing_manifest_field(door_sequence, tmp_path):
    out = write_sequence(door_sequence, tmp_path / "seq")
    manifest = json.loads((out / "manifest.json").read_text())
    del manifest["num_classes"]
    (out / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(InputError) as err:
        load_sequence(out)
    assert "num_classes" in str(err.value)
