"""Entropy scoring and the softmax weighting of per-part scores.

Frozen values below were produced by oracles.entropy_oracle /
oracles.softmax_oracle (scalar math reimplementations):

  two inferences (0.9, 0.1) and (0.7, 0.3) -> mean (0.8, 0.2)
  raw entropy  = -(0.8 ln 0.8 + 0.2 ln 0.2) = 0.5004024235381879
  normalized   = raw / ln 2                 = 0.7219280948873623

  softmax(0, 1) = (0.2689414213699951, 0.7310585786300049)
"""

import math

import numpy as np
import pytest

from fusbench.core import InputError
from fusbench.uncertainty import (
    UncertaintyMap,
    entropy_of_mean,
    part_uncertainty,
    predictive_entropy,
    uncertainty_weights,
)
from fusbench.core import SegmentationMap

from conftest import make_stack, random_stack
from oracles import entropy_oracle, softmax_oracle


def test_entropy_frozen_two_class_value():
    stack = make_stack(
        [
            [[[0.9]], [[0.1]]],
            [[[0.7]], [[0.3]]],
        ]
    )
    got = predictive_entropy(stack).values[0, 0]
    assert got == pytest.approx(0.7219280948873623, abs=1e-15)
    # ... which is the raw mean-entropy over ln(2)
    assert got * math.log(2) == pytest.approx(0.5004024235381879, abs=1e-15)


def test_entropy_averages_before_scoring():
    # entropy(mean) != mean(entropy): two confident-but-opposite inferences
    # average to the uniform distribution, which must score as maximal
    stack = make_stack(
        [
            [[[1.0]], [[0.0]]],
            [[[0.0]], [[1.0]]],
        ]
    )
    assert predictive_entropy(stack).values[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_entropy_zero_for_one_hot():
    stack = make_stack([[[[1.0]], [[0.0]]]])
    assert predictive_entropy(stack).values[0, 0] == 0.0


def test_entropy_matches_oracle_on_random_stacks():
    rng = np.random.default_rng(123)
    for _ in range(25):
        k = int(rng.integers(1, 5))
        c = int(rng.integers(2, 5))
        stack = random_stack(rng, k, c, 3, 4)
        got = predictive_entropy(stack).values
        want = entropy_oracle(stack.probs)
        assert np.allclose(got, want, atol=1e-12)


def test_entropy_values_stay_in_unit_interval():
    rng = np.random.default_rng(5)
    for _ in range(20):
        stack = random_stack(rng, int(rng.integers(1, 6)), int(rng.integers(2, 6)), 4, 4)
        vals = predictive_entropy(stack).values
        assert vals.min() >= 0.0 and vals.max() <= 1.0


def test_entropy_needs_two_classes():
    with pytest.raises(InputError):
        entropy_of_mean(np.ones((1, 2, 2)))


def test_uncertainty_map_must_be_2d():
    with pytest.raises(InputError):
        UncertaintyMap(values=np.zeros(5))


def test_part_uncertainty_groups_by_label_row_major():
    unc = UncertaintyMap(values=np.array([[0.1, 0.2], [0.3, 0.4]]))
    seg = SegmentationMap(labels=np.array([[1, 2], [2, 0]], dtype=np.int32), num_classes=3)
    groups = part_uncertainty(unc, seg)
    assert set(groups) == {1, 2}
    assert groups[1].tolist() == [0.1]
    assert groups[2].tolist() == [0.2, 0.3]  # row-major order


def test_part_uncertainty_covers_absent_parts_with_empty_vectors():
    unc = UncertaintyMap(values=np.zeros((2, 2)))
    seg = SegmentationMap(labels=np.zeros((2, 2), dtype=np.int32), num_classes=4)
    groups = part_uncertainty(unc, seg)
    assert set(groups) == {1, 2, 3}
    assert all(len(v) == 0 for v in groups.values())


def test_softmax_frozen_pair():
    w = uncertainty_weights(np.array([0.0, 1.0]))
    assert w[0] == pytest.approx(0.2689414213699951, abs=1e-15)
    assert w[1] == pytest.approx(0.7310585786300049, abs=1e-15)


def test_softmax_matches_oracle_and_sums_to_one():
    rng = np.random.default_rng(77)
    for _ in range(100):
        scores = rng.normal(scale=rng.uniform(0.1, 50), size=rng.integers(1, 40))
        got = uncertainty_weights(scores)
        assert np.allclose(got, softmax_oracle(scores), atol=1e-12)
        assert got.sum() == pytest.approx(1.0, abs=1e-12)
        assert got.min() > 0.0


def test_softmax_shift_invariance():
    rng = np.random.default_rng(4)
    for _ in range(50):
        scores = rng.normal(size=8)
        shift = rng.uniform(-100, 100)
        assert np.allclose(uncertainty_weights(scores),
                           uncertainty_weights(scores + shift), atol=1e-12)


def test_softmax_is_monotone_in_scores():
    w = uncertainty_weights(np.array([0.1, 0.5, 0.9]))
    assert w[0] < w[1] < w[2]


def test_softmax_extreme_scores_stay_finite():
    w = uncertainty_weights(np.array([1e308, 0.0, -1e308]))
    assert np.all(np.isfinite(w))
    assert w.sum() == pytest.approx(1.0)


def test_softmax_empty_and_invalid():
    assert uncertainty_weights(np.zeros(0)).shape == (0,)
    with pytest.raises(InputError):
        uncertainty_weights(np.array([0.1, np.nan]))
    with pytest.raises(InputError):
        uncertainty_weights(np.array([np.inf]))
