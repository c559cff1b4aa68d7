"""Temporal-consistency weights from a bounded queue of recent samples.

Each part keeps a FIFO of the point sets sampled for it over the last few
frames.  A new candidate is scored by its distance to the nearest queued
point for that part (the union of all queued sets), and the weight decays
exponentially with that distance: w = 2 ** (-decay * d).  A candidate on top
of a recent sample keeps weight 1; one metres away is effectively excluded.

Because the queue is bounded, a bad frame ages out: once enough clean frames
have been pushed, the erroneous set no longer influences any weight.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import InputError
from .distances import nearest_distances
from .io import write_ply


@dataclass
class QueueEntry:
    """One sampled point set together with the frame it came from."""

    points: np.ndarray
    frame: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)


class SampleQueue:
    """Per-part FIFO of the most recent sampled point sets.

    ``capacity`` bounds the number of entries kept per part; pushing onto a
    full queue evicts that part's oldest entry.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InputError("queue capacity must be at least 1")
        self.capacity = int(capacity)
        self._entries: dict[int, deque[QueueEntry]] = {}

    def push(self, part: int, points: np.ndarray, frame: int) -> None:
        entry = QueueEntry(points=np.array(points, dtype=float, copy=True), frame=int(frame))
        if len(entry.points) == 0:
            raise InputError("cannot queue an empty point set")
        self._entries.setdefault(int(part), deque(maxlen=self.capacity)).append(entry)

    def parts(self) -> list[int]:
        return sorted(self._entries)

    def entries(self, part: int) -> list[QueueEntry]:
        return list(self._entries.get(int(part), ()))

    def depth(self, part: int) -> int:
        return len(self._entries.get(int(part), ()))

    def latest(self, part: int) -> QueueEntry | None:
        queue = self._entries.get(int(part))
        return queue[-1] if queue else None

    def stacked_points(self, part: int) -> np.ndarray:
        """Union of all queued point sets for a part, (M, 3); empty if none."""
        queue = self._entries.get(int(part))
        if not queue:
            return np.zeros((0, 3))
        return np.concatenate([entry.points for entry in queue], axis=0)

    def dump(self, directory) -> list[Path]:
        """Write each queued entry as a PLY for replay or inspection."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for part in self.parts():
            for i, entry in enumerate(self.entries(part)):
                path = directory / f"part_{part}_entry_{i}_frame_{entry.frame}.ply"
                n = len(entry.points)
                write_ply(path, entry.points, np.full(n, part), np.zeros(n), scalar_name="weight")
                written.append(path)
        return written


def push_samples(queue: SampleQueue, sampled: dict[int, np.ndarray], frame: int) -> SampleQueue:
    """Push one frame's per-part sampled point sets onto the queue."""
    for part in sorted(sampled):
        queue.push(part, sampled[part], frame)
    return queue


def distance_to_queue(candidates: np.ndarray, queue: SampleQueue, part: int) -> np.ndarray:
    """Per-candidate distance to the nearest queued point of ``part``.

    An empty queue for the part gives all-zero distances, which makes the
    consistency weights neutral (every candidate gets weight 1).
    """
    candidates = np.asarray(candidates, dtype=float).reshape(-1, 3)
    reference = queue.stacked_points(part)
    if len(reference) == 0:
        return np.zeros(len(candidates))
    return nearest_distances(candidates, reference)


def consistency_weights(distances: np.ndarray, decay: float) -> np.ndarray:
    """Exponential distance decay 2 ** (-decay * d).

    ``decay`` is in units of 1/metre; ``distances`` must be non-negative.
    Weights are 1 at distance zero and halve every 1/decay metres.
    """
    distances = np.asarray(distances, dtype=float).reshape(-1)
    if decay <= 0 or not np.isfinite(decay):
        raise InputError("decay must be a positive finite number")
    if distances.size and (np.any(distances < 0) or not np.all(np.isfinite(distances))):
        raise InputError("distances must be finite and non-negative")
    return np.exp2(-decay * distances)
