import sys
from pathlib import Path

import numpy as np
import pytest

# make oracles.py importable from every test module
sys.path.insert(0, str(Path(__file__).parent))

from fusbench.core import CameraModel, DepthMap, ProbabilityStack
from fusbench.simulator import NoiseSpec, build_scene, generate_sequence


def make_stack(arrays) -> ProbabilityStack:
    """ProbabilityStack from a nested list shaped (K, C, H, W)."""
    return ProbabilityStack(probs=np.asarray(arrays, dtype=float))


def random_stack(rng, k, c, h, w) -> ProbabilityStack:
    """Random valid stack: per-pixel distributions drawn from a Dirichlet."""
    raw = rng.gamma(1.0, size=(k, h, w, c))
    probs = raw / raw.sum(axis=-1, keepdims=True)
    return ProbabilityStack(probs=np.moveaxis(probs, -1, 1))


def identity_camera(width=8, height=6, fx=10.0, fy=10.0) -> CameraModel:
    return CameraModel(
        fx=fx,
        fy=fy,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        rotation=np.eye(3),
        translation=np.zeros(3),
    )


def flat_depth(width=8, height=6, value=2.0) -> DepthMap:
    return DepthMap(values=np.full((height, width), value))


CLEAN_NOISE = dict(
    depth_sigma=0.0,
    salt_pepper_rate=0.0,
    logit_sigma=0.0,
    boundary_jitter_px=0,
    boundary_flip_prob=0.0,
    blob_rate=0.0,
)


@pytest.fixture(scope="session")
def door_sequence():
    """Small noisy door sequence shared across tests (read-only)."""
    spec = build_scene("door", seed=11, frames=4)
    return generate_sequence(spec, NoiseSpec(), num_inferences=3)


@pytest.fixture(scope="session")
def clean_door_sequence():
    """Noise-free door sequence: probabilities are exact one-hots."""
    spec = build_scene("door", seed=11, frames=4)
    return generate_sequence(spec, NoiseSpec(**CLEAN_NOISE), num_inferences=2)
