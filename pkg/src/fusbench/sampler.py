"""Per-part point sampling strategies and the per-frame dispatcher.

The main strategy ("FUS") draws a fixed number of points per part without
replacement, with probabilities proportional to the elementwise product of
uncertainty weights (softmax of per-point uncertainty) and temporal
consistency weights (distance decay against a queue of recent samples).
Ablations drop one factor; Random, FPS, and ScoreBased are per-part
baselines; UniformDownsample ignores parts and subsamples the whole scene
above the table plane.

Randomness is drawn from named streams: the generator for a given
(seed, frame, part) triple is PCG64 seeded with SeedSequence((seed, frame,
part)), so per-part draws are reproducible and order-independent, including
under parallel execution.  The whole-scene downsampler uses part slot 0,
which per-part strategies never touch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .consistency import SampleQueue, consistency_weights, distance_to_queue, push_samples
from .core import BACKGROUND, InputError, PartPointCloud
from .uncertainty import uncertainty_weights

STRATEGIES = (
    "FUS",
    "FUS-no-uncertainty",
    "FUS-no-consistency",
    "Random",
    "FPS",
    "ScoreBased",
    "UniformDownsample",
)

_FUS_FAMILY = ("FUS", "FUS-no-uncertainty", "FUS-no-consistency")

# Points at or below the table height plus this margin are discarded by the
# whole-scene downsampler (sensor noise puts tabletop returns a few mm high).
TABLE_MARGIN = 0.005


@dataclass
class SamplerConfig:
    """Sampling hyperparameters.

    Defaults: 32 points per part, 4 stochastic inferences per frame, a
    3-frame consistency queue, and a distance decay of 40 per metre (weight
    halves every 2.5 cm).
    """

    points_per_part: int = 32
    num_inferences: int = 4
    queue_length: int = 3
    decay_per_meter: float = 40.0
    strategy: str = "FUS"
    downsample_total: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.points_per_part < 1:
            raise InputError("points_per_part must be at least 1")
        if self.num_inferences < 1:
            raise InputError("num_inferences must be at least 1")
        if self.queue_length < 1:
            raise InputError("queue_length must be at least 1")
        if self.decay_per_meter <= 0:
            raise InputError("decay_per_meter must be positive")
        if self.strategy not in STRATEGIES:
            raise InputError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.downsample_total < 1:
            raise InputError("downsample_total must be at least 1")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, payload: dict) -> "SamplerConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise InputError(f"unknown sampler config keys: {', '.join(unknown)}")
        return cls(**payload)

    def with_overrides(self, **overrides) -> "SamplerConfig":
        return replace(self, **overrides)


@dataclass
class SampledPart:
    """Points selected for one part in one frame.

    ``pixels`` are flat source-pixel indices (-1 for points replayed from the
    queue when the part had no candidates), ``weights`` the sampling weights
    of the chosen candidates (1 for unweighted strategies, 0 for replayed
    points), ``from_queue`` marks a replayed set.
    """

    points: np.ndarray
    pixels: np.ndarray
    weights: np.ndarray
    from_queue: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.pixels = np.asarray(self.pixels, dtype=np.int64).reshape(-1)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class SampledFrame:
    """All parts sampled in one frame.

    ``unavailable`` lists parts that had no candidates and no queue history;
    consumers decide how to handle them.
    """

    frame: int
    strategy: str
    parts: dict[int, SampledPart] = field(default_factory=dict)
    unavailable: list[int] = field(default_factory=list)

    def part_ids(self) -> list[int]:
        return sorted(self.parts)

    def total_points(self) -> int:
        return sum(len(p) for p in self.parts.values())

    def stacked(self, num_classes: int) -> np.ndarray:
        """All points as one (N, 3 + num_classes) array with one-hot labels."""
        blocks = []
        for c in self.part_ids():
            part = self.parts[c]
            onehot = np.zeros((len(part), num_classes))
            if c >= num_classes:
                raise InputError(f"part {c} does not fit in {num_classes} classes")
            onehot[:, c] = 1.0
            blocks.append(np.hstack([part.points, onehot]))
        if not blocks:
            return np.zeros((0, 3 + num_classes))
        return np.vstack(blocks)


def part_stream(seed: int, frame: int, part: int) -> np.random.Generator:
    """Named RNG stream for one (seed, frame, part) cell.

    Streams are independent by construction, so sampling parts in any order,
    or in parallel, yields identical draws.
    """
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(frame), int(part))))


def combine_weights(uncertainty_w: np.ndarray, consistency_w: np.ndarray) -> np.ndarray:
    """Elementwise product of the two weight vectors, no renormalization."""
    uncertainty_w = np.asarray(uncertainty_w, dtype=float).reshape(-1)
    consistency_w = np.asarray(consistency_w, dtype=float).reshape(-1)
    if uncertainty_w.shape != consistency_w.shape:
        raise InputError("weight vectors must have equal length")
    return uncertainty_w * consistency_w


def weighted_sample_indices(weights: np.ndarray, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw candidate indices with probability proportional to weight.

    Without replacement, distributed exactly as sequential renormalized
    draws (pick one proportional to weight, remove it, repeat).  Implemented
    with one vectorized pass via exponential sort keys — log(u)/w, largest
    first — which realizes that distribution without the per-draw loop.
    If positive weights run out the remaining picks are uniform over the
    zero-weight leftovers.  With fewer candidates than requested, all
    candidates are returned (input order) followed by draws with replacement
    proportional to the original weights.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    n = len(weights)
    if n == 0:
        raise InputError("cannot sample from an empty candidate set")
    if n_samples < 1:
        raise InputError("n_samples must be at least 1")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise InputError("weights must be finite and non-negative")

    if n <= n_samples:
        chosen = np.arange(n)
        extra = n_samples - n
        if extra:
            chosen = np.concatenate([chosen, _replacement_draws(weights, extra, rng)])
        return chosen

    positive = weights > 0.0
    u = rng.random(n)
    log_u = np.full(n, -np.inf)
    np.log(u, where=u > 0.0, out=log_u)
    keys = np.full(n, -np.inf)  # zero weight -> never beats a positive one
    np.divide(log_u, weights, where=positive, out=keys)
    n_positive = int(positive.sum())
    if n_positive >= n_samples:
        top = np.argpartition(-keys, n_samples - 1)[:n_samples]
        return top[np.argsort(-keys[top], kind="stable")].astype(np.int64)
    # Positive weights exhausted; finish uniformly over what is left.
    order = np.argsort(-keys, kind="stable")
    chosen = order[:n_positive]
    fill = rng.choice(order[n_positive:], size=n_samples - n_positive, replace=False)
    return np.concatenate([chosen, fill]).astype(np.int64)


def _replacement_draws(weights: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    total = weights.sum()
    if total <= 0.0:
        return rng.integers(0, len(weights), size=count)
    cumulative = np.cumsum(weights)
    picks = np.searchsorted(cumulative, rng.random(count) * total, side="right")
    return np.minimum(picks, len(weights) - 1).astype(np.int64)


def fps_sample_indices(points: np.ndarray, n_samples: int) -> np.ndarray:
    """Farthest-point selection seeded at the point farthest from the centroid.

    Each following pick maximizes the minimum distance to the picked set.
    All ties resolve to the lowest index.  Short candidate lists are padded
    by repeating the final pick.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(points)
    if n == 0:
        raise InputError("cannot sample from an empty candidate set")
    if n_samples < 1:
        raise InputError("n_samples must be at least 1")
    centroid = points.mean(axis=0)
    take = min(n, n_samples)
    chosen = np.empty(take, dtype=np.int64)
    chosen[0] = int(np.argmax(np.linalg.norm(points - centroid, axis=1)))
    min_dist = np.linalg.norm(points - points[chosen[0]], axis=1)
    for i in range(1, take):
        pick = int(np.argmax(min_dist))
        chosen[i] = pick
        np.minimum(min_dist, np.linalg.norm(points - points[pick], axis=1), out=min_dist)
    if take < n_samples:
        chosen = np.concatenate([chosen, np.full(n_samples - take, chosen[-1], dtype=np.int64)])
    return chosen


def score_sample_indices(scores: np.ndarray, n_samples: int) -> np.ndarray:
    """Top-scoring candidates, ties toward the lowest index, padded if short."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    n = len(scores)
    if n == 0:
        raise InputError("cannot sample from an empty candidate set")
    if n_samples < 1:
        raise InputError("n_samples must be at least 1")
    order = np.argsort(-scores, kind="stable")
    take = min(n, n_samples)
    chosen = order[:take].astype(np.int64)
    if take < n_samples:
        chosen = np.concatenate([chosen, np.full(n_samples - take, chosen[-1], dtype=np.int64)])
    return chosen


def uniform_downsample_indices(
    points: np.ndarray,
    table_height: float,
    total: int,
    rng: np.random.Generator,
    margin: float = TABLE_MARGIN,
) -> np.ndarray:
    """Whole-scene subsampling: drop tabletop points, keep a uniform subset.

    Points with z at or below ``table_height + margin`` are removed; of the
    survivors, ``total`` are kept uniformly at random without replacement
    (all of them if fewer survive).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if total < 1:
        raise InputError("total must be at least 1")
    survivors = np.flatnonzero(points[:, 2] > table_height + margin)
    if len(survivors) <= total:
        return survivors
    return survivors[rng.choice(len(survivors), size=total, replace=False)]


def sample_frame(
    cloud: PartPointCloud,
    queue: SampleQueue,
    cfg: SamplerConfig,
    frame_index: int,
    part_scores: dict[int, np.ndarray] | None = None,
    table_height: float | None = None,
) -> SampledFrame:
    """Sample one frame with the configured strategy.

    Per-part strategies visit every part present in the cloud or remembered
    by the queue and return exactly ``points_per_part`` points each; a part
    with no candidates this frame replays its most recent queued set, and
    parts with no history are reported as unavailable.  Frame 0 of the
    FUS-family strategies is a plain uniform draw (there is no queue or
    uncertainty history to trust yet), which makes it bitwise identical to
    Random under the same seed.  Sampled sets are pushed onto the queue.

    ScoreBased needs ``part_scores`` (per-candidate mean class probability);
    UniformDownsample needs ``table_height`` and a cloud lifted with
    background points included.
    """
    if cfg.strategy == "UniformDownsample":
        return _sample_downsample(cloud, cfg, frame_index, table_height)

    result = SampledFrame(frame=int(frame_index), strategy=cfg.strategy)
    part_ids = sorted(set(cloud.part_ids()) | set(queue.parts()))
    pushes: dict[int, np.ndarray] = {}
    for c in part_ids:
        candidates = cloud.parts.get(c)
        if candidates is None or len(candidates) == 0:
            entry = queue.latest(c)
            if entry is None:
                result.unavailable.append(c)
                continue
            n = len(entry.points)
            result.parts[c] = SampledPart(
                points=entry.points.copy(),
                pixels=np.full(n, -1, dtype=np.int64),
                weights=np.zeros(n),
                from_queue=True,
            )
            pushes[c] = entry.points.copy()
            continue

        if cfg.strategy == "FPS":
            idx = fps_sample_indices(candidates.points, cfg.points_per_part)
            weights = np.ones(len(candidates))
        elif cfg.strategy == "ScoreBased":
            if part_scores is None or c not in part_scores:
                raise InputError("ScoreBased sampling needs per-part candidate scores")
            scores = np.asarray(part_scores[c], dtype=float).reshape(-1)
            if len(scores) != len(candidates):
                raise InputError(f"part {c}: score vector length does not match candidates")
            idx = score_sample_indices(scores, cfg.points_per_part)
            weights = np.ones(len(candidates))
        else:
            weights = _strategy_weights(candidates, queue, cfg, c, frame_index)
            rng = part_stream(cfg.seed, frame_index, c)
            idx = weighted_sample_indices(weights, cfg.points_per_part, rng)

        result.parts[c] = SampledPart(
            points=candidates.points[idx],
            pixels=candidates.pixels[idx],
            weights=weights[idx],
        )
        pushes[c] = candidates.points[idx]

    push_samples(queue, pushes, frame_index)
    return result


def _strategy_weights(candidates, queue, cfg, part, frame_index):
    n = len(candidates)
    if cfg.strategy == "Random":
        return np.ones(n)
    if cfg.strategy not in _FUS_FAMILY:
        raise InputError(f"unknown strategy {cfg.strategy!r}")
    if frame_index == 0:
        return np.ones(n)
    if cfg.strategy == "FUS-no-uncertainty":
        unc_w = np.ones(n)
    else:
        unc_w = uncertainty_weights(candidates.uncertainty)
    if cfg.strategy == "FUS-no-consistency":
        con_w = np.ones(n)
    else:
        dist = distance_to_queue(candidates.points, queue, part)
        con_w = consistency_weights(dist, cfg.decay_per_meter)
    return combine_weights(unc_w, con_w)


def _sample_downsample(cloud, cfg, frame_index, table_height):
    if table_height is None:
        raise InputError("UniformDownsample needs the table height")
    labels_present = sorted(cloud.parts)
    if not labels_present:
        raise InputError("cannot downsample an empty cloud")
    points = np.concatenate([cloud.parts[c].points for c in labels_present], axis=0)
    pixels = np.concatenate([cloud.parts[c].pixels for c in labels_present], axis=0)
    labels = np.concatenate(
        [np.full(len(cloud.parts[c]), c, dtype=np.int64) for c in labels_present]
    )
    rng = part_stream(cfg.seed, frame_index, 0)
    idx = uniform_downsample_indices(points, table_height, cfg.downsample_total, rng)
    result = SampledFrame(frame=int(frame_index), strategy=cfg.strategy)
    chosen_labels = labels[idx]
    for c in np.unique(chosen_labels):
        sel = idx[chosen_labels == c]
        result.parts[int(c)] = SampledPart(
            points=points[sel],
            pixels=pixels[sel],
            weights=np.ones(len(sel)),
        )
    return result
