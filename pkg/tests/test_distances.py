"""The two nearest-distance code paths must agree bitwise.

Small instances take a dense all-pairs matrix; large ones a k-d tree.  The
tree prunes candidate pairs but computes each surviving distance with the
same arithmetic, so switching paths must never change a single bit.
"""

import numpy as np
import pytest

import fusbench.distances as distances
from fusbench.core import InputError
from fusbench.distances import nearest_distances

from oracles import nearest_bruteforce


def test_both_paths_match_bruteforce_bitwise():
    rng = np.random.default_rng(64)
    for _ in range(20):
        n = int(rng.integers(1, 400))
        m = int(rng.integers(1, 400))
        q = rng.normal(size=(n, 3)) * rng.uniform(0.01, 20)
        r = rng.normal(size=(m, 3)) * rng.uniform(0.01, 20)
        want = nearest_bruteforce(q, r)
        assert np.array_equal(nearest_distances(q, r), want)


def test_large_instance_uses_tree_and_still_matches(monkeypatch):
    rng = np.random.default_rng(65)
    q = rng.normal(size=(900, 3))
    r = rng.normal(size=(900, 3))  # 810k pairs > threshold -> tree path
    assert 900 * 900 > distances._DENSE_PAIRS
    tree = nearest_distances(q, r)
    monkeypatch.setattr(distances, "_DENSE_PAIRS", 10**9)
    dense = nearest_distances(q, r)
    assert np.array_equal(tree, dense)


def test_empty_query_and_reference():
    assert nearest_distances(np.zeros((0, 3)), np.ones((3, 3))).shape == (0,)
    with pytest.raises(InputError):
        nearest_distances(np.ones((2, 3)), np.zeros((0, 3)))
