"""Predictive-entropy uncertainty from stochastic segmentation inferences.

A frame's K probability maps are averaged per pixel and scored with Shannon
entropy, normalized by log(C) so the map lives in [0, 1] regardless of the
class count.  Per-part uncertainty vectors feed a softmax that turns raw
scores into sampling weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BACKGROUND, InputError, ProbabilityStack, SegmentationMap


@dataclass
class UncertaintyMap:
    """Normalized per-pixel uncertainty raster, values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise InputError("uncertainty raster must be 2-D")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def predictive_entropy(stack: ProbabilityStack) -> UncertaintyMap:
    """Entropy of the mean probability map, normalized to [0, 1].

    The mean over inferences is taken first, then per-pixel entropy
    -sum_c p_c ln p_c with the 0 * ln 0 = 0 convention, divided by ln(C).
    Requires at least two classes (ln C would vanish otherwise).
    """
    if stack.num_classes < 2:
        raise InputError("entropy needs at least two classes")
    return UncertaintyMap(values=entropy_of_mean(stack.mean_probabilities()))


def entropy_of_mean(mean: np.ndarray) -> np.ndarray:
    """Normalized entropy of an already-averaged (C, ...) probability array."""
    mean = np.asarray(mean, dtype=float)
    if mean.shape[0] < 2:
        raise InputError("entropy needs at least two classes")
    log_mean = np.zeros_like(mean)
    np.log(mean, out=log_mean, where=mean > 0.0)
    raw = -(mean * log_mean).sum(axis=0)
    values = raw / np.log(mean.shape[0])
    # Rounding can push an exactly-uniform pixel a few ulp past 1.
    np.clip(values, 0.0, 1.0, out=values)
    return values


def part_uncertainty(unc: UncertaintyMap, seg: SegmentationMap) -> dict[int, np.ndarray]:
    """Uncertainty values grouped by part label, row-major within each part.

    Background is skipped.  Parts without pixels map to empty vectors so the
    result always covers labels 1 .. num_classes - 1.
    """
    if unc.values.shape != seg.labels.shape:
        raise InputError("uncertainty and label rasters must have matching shapes")
    flat_unc = unc.values.reshape(-1)
    flat_labels = seg.labels.reshape(-1)
    return {
        c: flat_unc[flat_labels == c]
        for c in range(1, seg.num_classes)
        if c != BACKGROUND
    }


def uncertainty_weights(scores: np.ndarray) -> np.ndarray:
    """Softmax of a part's uncertainty vector.

    Shifted by the max before exponentiation, so the result is finite for any
    finite input and invariant (to rounding) under a constant offset.  An
    empty vector yields an empty weight vector.
    """
    scores = np.asarray(scores, dtype=float).reshape(-1)
    if scores.size == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(scores)):
        raise InputError("uncertainty scores must be finite")
    with np.errstate(over="ignore"):  # scores near float-max saturate to -inf
        shifted = scores - scores.max()
    ex = np.exp(shifted)
    return ex / ex.sum()
