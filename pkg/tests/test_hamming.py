import itertools

import numpy as np
import pytest

from privnet.core.errors import DimensionMismatchError, InvalidParameterError
from privnet.core.evaluators import align_labels, best_permutation, confusion_matrix, hamming_error


def _brute_force(c_hat, c_star, K):
    n = len(c_hat)
    best = min(np.sum(np.asarray(perm)[c_hat] != c_star) for perm in itertools.permutations(range(K)))
    return best / n


def test_identical_and_relabeled_partitions():
    c = np.array([0, 0, 1, 1, 2, 2])
    assert hamming_error(c, c, 3) == 0.0
    swapped = np.array([1, 1, 0, 0, 2, 2])
    assert hamming_error(swapped, c, 3) == 0.0


def test_small_example():
    assert hamming_error([0, 0, 1, 1], [0, 1, 1, 1], 2) == 0.25


def test_empty_labels():
    assert hamming_error([], [], 3) == 0.0


def test_label_checks():
    with pytest.raises(DimensionMismatchError):
        hamming_error([0, 1], [0, 1, 1], 2)
    with pytest.raises(InvalidParameterError):
        hamming_error([0, 2], [0, 1], 2)
    with pytest.raises(InvalidParameterError):
        hamming_error([0, -1], [0, 1], 2)


def test_confusion_matrix_counts():
    counts = confusion_matrix([1, 1, 0, 2], [0, 0, 1, 1], 3)
    np.testing.assert_array_equal(counts, [[0, 2, 0], [1, 0, 1], [0, 0, 0]])


def test_matches_exhaustive_relabeling():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        K = int(rng.integers(1, 6))
        n = int(rng.integers(1, 13))
        c_hat = rng.integers(0, K, size=n)
        c_star = rng.integers(0, K, size=n)
        assert hamming_error(c_hat, c_star, K) == _brute_force(c_hat, c_star, K)


def test_symmetric_in_arguments():
    rng = np.random.default_rng(8)
    for _ in range(200):
        a = rng.integers(0, 4, size=30)
        b = rng.integers(0, 4, size=30)
        assert hamming_error(a, b, 4) == hamming_error(b, a, 4)


def test_align_labels_reaches_the_minimum():
    c_star = np.array([0, 0, 1, 1, 2, 2, 2])
    c_hat = np.array([2, 2, 0, 0, 1, 1, 0])
    pi = best_permutation(c_hat, c_star, 3)
    assert sorted(pi.tolist()) == [0, 1, 2]
    aligned = align_labels(c_hat, c_star, 3)
    assert np.mean(aligned != c_star) == hamming_error(c_hat, c_star, 3)
    np.testing.assert_array_equal(aligned, [0, 0, 1, 1, 2, 2, 1])
