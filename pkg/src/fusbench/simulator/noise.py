"""Sensor and segmentation corruption applied to clean renders.

Depth gets additive Gaussian noise plus salt-and-pepper dropouts (a corrupted
pixel is either zeroed or saturated to the sensor's max range; both read back
as invalid).  The label channel is corrupted in three ways before being
expanded into K stochastic probability maps:

* boundary jitter: pixels near a label boundary flip to a neighbour's label
  independently per inference, modelling segmentation flicker,
* blob misclassification: compact disks get relabelled, persistently across
  the K inferences of a frame (optionally re-centred by a pixel or two per
  inference), modelling a network that is confidently wrong,
* logit noise: each inference's one-hot labels become softmax(gain * onehot
  + sigma * gaussian), modelling calibration spread.

With every rate and sigma at zero the output stack is exactly K copies of
the one-hot ground truth.

All randomness comes from named streams keyed by (seed, frame, purpose tag)
so sequences are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage

from ..core import DepthMap, InputError, ProbabilityStack
from .render import RenderedFrame

_TAG_DEPTH = 101
_TAG_SALT = 102
_TAG_BLOB = 103
_TAG_JITTER = 104
_TAG_LOGIT = 105
_TAG_BLOB_K = 106


@dataclass
class NoiseSpec:
    """Corruption parameters; defaults approximate a mid-quality RGB-D rig."""

    depth_sigma: float = 0.002
    salt_pepper_rate: float = 0.005
    depth_max_range: float = 10.0
    logit_sigma: float = 0.5
    logit_gain: float = 4.0
    boundary_jitter_px: int = 1
    boundary_flip_prob: float = 0.35
    blob_rate: float = 0.1
    blob_radius_px: tuple[float, float] = (3.0, 8.0)
    blob_placement: str = "adjacent"
    blob_target: int | str = "random"
    blob_jitter_px: int = 1

    def __post_init__(self):
        if self.depth_sigma < 0 or self.logit_sigma < 0:
            raise InputError("noise sigmas must be non-negative")
        if not 0.0 <= self.salt_pepper_rate <= 1.0:
            raise InputError("salt_pepper_rate must lie in [0, 1]")
        if not 0.0 <= self.boundary_flip_prob <= 1.0:
            raise InputError("boundary_flip_prob must lie in [0, 1]")
        if self.blob_rate < 0:
            raise InputError("blob_rate must be non-negative")
        if self.depth_max_range <= 0:
            raise InputError("depth_max_range must be positive")
        if self.boundary_jitter_px < 0 or self.blob_jitter_px < 0:
            raise InputError("jitter widths must be non-negative")
        self.blob_radius_px = (float(self.blob_radius_px[0]), float(self.blob_radius_px[1]))
        if self.blob_radius_px[0] <= 0 or self.blob_radius_px[1] < self.blob_radius_px[0]:
            raise InputError("blob_radius_px must be an increasing pair of positive values")
        if self.blob_placement not in ("adjacent", "anywhere"):
            raise InputError("blob_placement must be 'adjacent' or 'anywhere'")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "NoiseSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise InputError(f"unknown noise keys: {', '.join(unknown)}")
        payload = dict(payload)
        if "blob_radius_px" in payload:
            payload["blob_radius_px"] = tuple(payload["blob_radius_px"])
        return cls(**payload)


def _stream(seed: int, frame: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(frame)) + tags))


def corrupt(
    rendered: RenderedFrame,
    noise: NoiseSpec,
    num_inferences: int,
    seed: int,
    frame: int,
) -> tuple[DepthMap, ProbabilityStack]:
    """Corrupt one clean frame into a noisy depth map and probability stack."""
    if num_inferences < 1:
        raise InputError("num_inferences must be at least 1")
    depth = _corrupt_depth(rendered.depth.values, noise, seed, frame)
    stack = _corrupt_labels(rendered.seg.labels, rendered.seg.num_classes, noise,
                            num_inferences, seed, frame)
    return depth, stack


def _corrupt_depth(clean: np.ndarray, noise: NoiseSpec, seed: int, frame: int) -> DepthMap:
    values = clean.copy()
    if noise.depth_sigma > 0:
        rng = _stream(seed, frame, _TAG_DEPTH)
        valid = values > 0
        values[valid] = values[valid] + noise.depth_sigma * rng.standard_normal(int(valid.sum()))
    if noise.salt_pepper_rate > 0:
        rng = _stream(seed, frame, _TAG_SALT)
        corrupted = rng.random(values.shape) < noise.salt_pepper_rate
        saturate = rng.random(values.shape) < 0.5
        values[corrupted & saturate] = noise.depth_max_range
        values[corrupted & ~saturate] = 0.0
    return DepthMap(values=values, max_range=noise.depth_max_range)


def _corrupt_labels(
    gt: np.ndarray,
    num_classes: int,
    noise: NoiseSpec,
    num_inferences: int,
    seed: int,
    frame: int,
) -> ProbabilityStack:
    height, width = gt.shape
    blobs = _draw_blobs(gt, num_classes, noise, seed, frame)
    band = None
    if noise.boundary_jitter_px > 0 and noise.boundary_flip_prob > 0:
        band = _boundary_band(gt, noise.boundary_jitter_px)

    stack = np.zeros((num_inferences, num_classes, height, width))
    vv, uu = np.ogrid[:height, :width]
    for k in range(num_inferences):
        labels = gt.copy()
        if band is not None:
            labels = _jitter_boundaries(labels, band, noise, seed, frame, k)
        jitter_rng = _stream(seed, frame, _TAG_BLOB_K, k) if noise.blob_jitter_px else None
        for center_v, center_u, radius, target in blobs:
            cv, cu = center_v, center_u
            if jitter_rng is not None:
                cv += int(jitter_rng.integers(-noise.blob_jitter_px, noise.blob_jitter_px + 1))
                cu += int(jitter_rng.integers(-noise.blob_jitter_px, noise.blob_jitter_px + 1))
            disk = (vv - cv) ** 2 + (uu - cu) ** 2 <= radius**2
            labels[disk] = target
        stack[k] = _labels_to_probs(labels, num_classes, noise, seed, frame, k)
    return ProbabilityStack(probs=stack)


def _boundary_band(gt: np.ndarray, width_px: int) -> np.ndarray:
    boundary = np.zeros(gt.shape, dtype=bool)
    boundary[:-1, :] |= gt[:-1, :] != gt[1:, :]
    boundary[1:, :] |= gt[1:, :] != gt[:-1, :]
    boundary[:, :-1] |= gt[:, :-1] != gt[:, 1:]
    boundary[:, 1:] |= gt[:, 1:] != gt[:, :-1]
    if width_px > 1:
        boundary = ndimage.binary_dilation(boundary, iterations=width_px - 1)
    return boundary


def _jitter_boundaries(labels, band, noise, seed, frame, k):
    rng = _stream(seed, frame, _TAG_JITTER, k)
    height, width = labels.shape
    flips = band & (rng.random(labels.shape) < noise.boundary_flip_prob)
    w = noise.boundary_jitter_px
    dv = rng.integers(-w, w + 1, size=labels.shape)
    du = rng.integers(-w, w + 1, size=labels.shape)
    vv, uu = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    src_v = np.clip(vv + dv, 0, height - 1)
    src_u = np.clip(uu + du, 0, width - 1)
    out = labels.copy()
    out[flips] = labels[src_v[flips], src_u[flips]]
    return out


def _draw_blobs(gt, num_classes, noise, seed, frame):
    if noise.blob_rate <= 0:
        return []
    rng = _stream(seed, frame, _TAG_BLOB)
    whole, frac = divmod(noise.blob_rate, 1.0)
    count = int(whole) + (1 if rng.random() < frac else 0)
    blobs = []
    for _ in range(count):
        radius = rng.uniform(*noise.blob_radius_px)
        if noise.blob_target == "random":
            target = int(rng.integers(1, num_classes))
        else:
            target = int(noise.blob_target)
            if not 1 <= target < num_classes:
                raise InputError(f"blob_target {target} outside part range [1, {num_classes})")
        if noise.blob_placement == "adjacent":
            mask = gt == target
            if not mask.any():
                continue
            # band of background/other-part pixels hugging the target part
            dist = ndimage.distance_transform_edt(~mask)
            candidates = np.flatnonzero((dist > 0) & (dist <= radius + 2.0))
            if candidates.size == 0:
                continue
            pick = int(candidates[rng.integers(0, candidates.size)])
        else:
            pick = int(rng.integers(0, gt.size))
        blobs.append((pick // gt.shape[1], pick % gt.shape[1], radius, target))
    return blobs


def _labels_to_probs(labels, num_classes, noise, seed, frame, k):
    height, width = labels.shape
    onehot = np.zeros((num_classes, height, width))
    flat = labels.reshape(-1)
    onehot.reshape(num_classes, -1)[flat, np.arange(flat.size)] = 1.0
    if noise.logit_sigma == 0:
        return onehot
    rng = _stream(seed, frame, _TAG_LOGIT, k)
    logits = noise.logit_gain * onehot
    logits += noise.logit_sigma * rng.standard_normal(logits.shape)
    logits -= logits.max(axis=0, keepdims=True)
    np.exp(logits, out=logits)
    logits /= logits.sum(axis=0, keepdims=True)
    return logits
