"""Rigid-transform algebra and the camera orientation helper.

The camera convention throughout: x right, y down, z forward (into the
scene), poses map camera coordinates to world coordinates.
"""

import numpy as np

from fusbench.geometry import (
    apply_pose,
    compose,
    identity_pose,
    invert_pose,
    look_at,
    make_pose,
    rotation_about_line,
    rotation_x,
    rotation_y,
    rotation_z,
    translation_pose,
)


def test_axis_rotations_move_basis_vectors():
    # z-rotation by 90 deg sends x to y
    assert np.allclose(rotation_z(np.pi / 2) @ [1, 0, 0], [0, 1, 0])
    assert np.allclose(rotation_x(np.pi / 2) @ [0, 1, 0], [0, 0, 1])
    assert np.allclose(rotation_y(np.pi / 2) @ [0, 0, 1], [1, 0, 0])


def test_identity_pose_is_noop():
    pts = np.array([[1.0, 2.0, 3.0], [-4.0, 0.5, 2.0]])
    assert np.array_equal(apply_pose(identity_pose(), pts), pts)


def test_invert_pose_round_trips():
    rng = np.random.default_rng(42)
    for _ in range(200):
        R = rotation_z(rng.uniform(-np.pi, np.pi)) @ rotation_x(rng.uniform(-np.pi, np.pi))
        pose = make_pose(R, rng.normal(size=3) * 5)
        pts = rng.normal(size=(7, 3))
        back = apply_pose(invert_pose(pose), apply_pose(pose, pts))
        assert np.allclose(back, pts, atol=1e-12)


def test_invert_uses_transpose_not_solve():
    # the inverse of a rigid pose must itself be rigid: R^T block, exact
    R = rotation_y(0.3) @ rotation_z(-1.2)
    pose = make_pose(R, [1.0, -2.0, 0.5])
    inv = invert_pose(pose)
    assert np.array_equal(inv[:3, :3], pose[:3, :3].T)
    assert np.allclose(inv @ pose, np.eye(4), atol=1e-15)


def test_compose_applies_right_to_left():
    rng = np.random.default_rng(3)
    a = make_pose(rotation_x(0.4), [1, 0, 0])
    b = make_pose(rotation_z(-0.7), [0, 2, 0])
    pts = rng.normal(size=(5, 3))
    assert np.allclose(apply_pose(compose(a, b), pts), apply_pose(a, apply_pose(b, pts)))


def test_rotation_about_line_fixes_points_on_the_line():
    axis, point = np.array([0.0, 0.0, 1.0]), np.array([2.0, 1.0, 0.0])
    pose = rotation_about_line(axis, point, 1.1)
    on_line = np.array([[2.0, 1.0, 0.0], [2.0, 1.0, 5.0], [2.0, 1.0, -3.0]])
    assert np.allclose(apply_pose(pose, on_line), on_line, atol=1e-12)


def test_rotation_about_line_quarter_turn():
    # rotate (3, 1, 0) a quarter turn about the vertical line through (2, 1, 0)
    pose = rotation_about_line([0, 0, 1], [2, 1, 0], np.pi / 2)
    moved = apply_pose(pose, np.array([[3.0, 1.0, 0.0]]))[0]
    assert np.allclose(moved, [2.0, 2.0, 0.0], atol=1e-12)


def test_translation_pose():
    pose = translation_pose([0.0, -0.25, 0.0])
    assert np.allclose(apply_pose(pose, np.zeros((1, 3)))[0], [0.0, -0.25, 0.0])


def test_look_at_z_axis_points_at_target():
    rng = np.random.default_rng(8)
    for _ in range(100):
        eye = rng.normal(size=3) * 2
        target = rng.normal(size=3) * 2
        if np.linalg.norm(target - eye) < 1e-3:
            continue
        R, t = look_at(eye, target)
        assert np.allclose(t, eye)
        forward = R[:, 2]
        expected = (target - eye) / np.linalg.norm(target - eye)
        assert np.allclose(forward, expected, atol=1e-12)
        # columns orthonormal, right-handed
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) > 0.99


def test_look_at_keeps_down_column_downward():
    # with a z-up world, the camera y axis (image down) should have a
    # non-positive world-z component whenever the view is near-horizontal
    R, _ = look_at([0.0, -1.0, 0.5], [0.0, 0.0, 0.5])
    down = R[:, 1]
    assert down[2] < 0.0
