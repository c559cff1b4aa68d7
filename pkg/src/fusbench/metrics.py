"""Quality metrics for sampled part point sets.

All distances are exact Euclidean nearest-neighbour minima (see
``distances``); nothing here approximates.  Conventions:

* chamfer: symmetric, the sum of the two directed mean-NN distances,
* temporal consistency: rigid-motion-compensated mean NN distance between
  one frame's samples and the next frame's samples, per part (lower is
  steadier),
* contamination: fraction of a part's sampled points whose ground-truth
  pixel label differs from the part,
* coverage: fraction of a reference cloud within a radius of any sample.
"""

from __future__ import annotations

import numpy as np

from .core import InputError
from .distances import nearest_distances
from .geometry import apply_pose, invert_pose
from .sampler import SampledFrame

DEFAULT_COVERAGE_RADIUS = 0.01


def chamfer(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Chamfer distance: mean NN a-to-b plus mean NN b-to-a."""
    a = np.asarray(a, dtype=float).reshape(-1, 3)
    b = np.asarray(b, dtype=float).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        raise InputError("chamfer distance needs two nonempty point sets")
    return float(nearest_distances(a, b).mean() + nearest_distances(b, a).mean())


def coverage(sampled: np.ndarray, reference: np.ndarray, radius: float = DEFAULT_COVERAGE_RADIUS) -> float:
    """Fraction of reference points with a sample within ``radius``."""
    sampled = np.asarray(sampled, dtype=float).reshape(-1, 3)
    reference = np.asarray(reference, dtype=float).reshape(-1, 3)
    if radius <= 0:
        raise InputError("coverage radius must be positive")
    if len(reference) == 0:
        raise InputError("coverage needs a nonempty reference cloud")
    if len(sampled) == 0:
        return 0.0
    return float((nearest_distances(reference, sampled) <= radius).mean())


def contamination(frame: SampledFrame, gt_labels: np.ndarray) -> dict[int, float | None]:
    """Per-part fraction of samples whose ground-truth pixel label differs.

    Points replayed from the queue carry no source pixel (index -1) and are
    excluded; a part with no attributable points maps to None.
    """
    gt_flat = np.asarray(gt_labels).reshape(-1)
    out: dict[int, float | None] = {}
    for c, part in frame.parts.items():
        if c == 0:
            continue
        attributable = part.pixels >= 0
        if not attributable.any():
            out[c] = None
            continue
        pixels = part.pixels[attributable]
        if pixels.max() >= gt_flat.size:
            raise InputError("sampled pixel index outside the ground-truth raster")
        out[c] = float((gt_flat[pixels] != c).mean())
    return out


def pair_consistency(prev_points: np.ndarray, cur_points: np.ndarray, motion: np.ndarray) -> float:
    """Mean NN distance from motion-compensated previous samples to current ones."""
    compensated = apply_pose(motion, prev_points)
    return float(nearest_distances(compensated, cur_points).mean())


def temporal_consistency(
    frames: list[SampledFrame],
    poses_per_frame: list[dict[int, np.ndarray]],
) -> dict[int, float | None]:
    """Average pairwise consistency over a whole trajectory, per part.

    ``poses_per_frame[t][c]`` is part c's rigid pose (rest frame to world) at
    frame t; consecutive poses give the ground-truth motion used to carry
    frame t samples into frame t+1 before measuring NN distances.  Parts
    missing from either side of a pair are skipped; a part with no usable
    pairs maps to None.
    """
    if len(frames) != len(poses_per_frame):
        raise InputError("need one pose dict per sampled frame")
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for t in range(len(frames) - 1):
        prev, cur = frames[t], frames[t + 1]
        for c in prev.parts:
            if c == 0 or c not in cur.parts:
                continue
            if c not in poses_per_frame[t] or c not in poses_per_frame[t + 1]:
                continue
            motion = poses_per_frame[t + 1][c] @ invert_pose(poses_per_frame[t][c])
            value = pair_consistency(prev.parts[c].points, cur.parts[c].points, motion)
            sums[c] = sums.get(c, 0.0) + value
            counts[c] = counts.get(c, 0) + 1
    return {c: (sums[c] / counts[c] if counts.get(c) else None) for c in sums}


def aggregate_rows(rows: list[dict]) -> dict:
    """Mean, std, median, and count per metric, grouped by strategy and part.

    ``rows`` are flat per-(strategy, seed, frame, part) dicts as produced by
    the benchmark runner; missing metric values (None) are ignored.
    """
    metric_names = ("chamfer", "consistency", "contamination", "coverage")
    by_strategy: dict[str, dict] = {}
    for row in rows:
        strategy = row["strategy"]
        node = by_strategy.setdefault(strategy, {"overall": {m: [] for m in metric_names}, "parts": {}})
        part_node = node["parts"].setdefault(
            str(row["part"]), {m: [] for m in metric_names}
        )
        for m in metric_names:
            value = row.get(m)
            if value is None:
                continue
            node["overall"][m].append(value)
            part_node[m].append(value)
    out = {}
    for strategy, node in sorted(by_strategy.items()):
        out[strategy] = {
            "overall": {m: _describe(vals) for m, vals in node["overall"].items()},
            "parts": {
                part: {m: _describe(vals) for m, vals in metrics.items()}
                for part, metrics in sorted(node["parts"].items())
            },
        }
    return out


def _describe(values: list[float]) -> dict | None:
    if not values:
        return None
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "median": float(np.median(arr)),
        "count": int(arr.size),
    }
