"""fusbench: part-aware point sampling from segmented depth frames.

The library back-projects per-part segmentation into world-space point
clouds, scores candidate points by prediction uncertainty and by closeness
to recently sampled points, and draws fixed-size per-part samples with a
family of strategies.  A small analytic simulator provides articulated
scenes with ground truth for benchmarking, and the metrics/report layers
turn sampled trajectories into comparable numbers.
"""

from .consistency import SampleQueue, consistency_weights, distance_to_queue
from .core import (
    BACKGROUND,
    CameraModel,
    DepthMap,
    InputError,
    PartPointCloud,
    PartPoints,
    ProbabilityStack,
    SegmentationMap,
    argmax_segmentation,
    lift_to_world,
)
from .metrics import chamfer, contamination, coverage, temporal_consistency
from .sampler import STRATEGIES, SampledFrame, SampledPart, SamplerConfig, sample_frame
from .uncertainty import predictive_entropy, uncertainty_weights

__version__ = "0.1.0"

__all__ = [
    "BACKGROUND",
    "CameraModel",
    "DepthMap",
    "InputError",
    "PartPointCloud",
    "PartPoints",
    "ProbabilityStack",
    "STRATEGIES",
    "SampleQueue",
    "SampledFrame",
    "SampledPart",
    "SamplerConfig",
    "SegmentationMap",
    "argmax_segmentation",
    "chamfer",
    "consistency_weights",
    "contamination",
    "coverage",
    "distance_to_queue",
    "lift_to_world",
    "predictive_entropy",
    "sample_frame",
    "temporal_consistency",
    "uncertainty_weights",
    "__version__",
]
