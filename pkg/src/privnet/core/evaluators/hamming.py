"""
Deterministic Evaluators
Minimum scaled Hamming distance between two community assignments, taken
over all relabelings and solved as a linear assignment on the confusion
matrix.
"""

import logging
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from privnet.core.errors import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)


def _check_labels(c_hat: np.ndarray, c_star: np.ndarray, K: int) -> Tuple[np.ndarray, np.ndarray]:
    c_hat = np.asarray(c_hat, dtype=np.int64).ravel()
    c_star = np.asarray(c_star, dtype=np.int64).ravel()
    if c_hat.shape != c_star.shape:
        raise DimensionMismatchError(f"label vectors differ in length: {c_hat.size} vs {c_star.size}")
    if K < 1:
        raise InvalidParameterError(f"K must be positive, got {K}")
    for name, labels in (("estimated", c_hat), ("reference", c_star)):
        if labels.size and (labels.min() < 0 or labels.max() >= K):
            raise InvalidParameterError(f"{name} labels must lie in [0, {K})")
    return c_hat, c_star


def confusion_matrix(c_hat: np.ndarray, c_star: np.ndarray, K: int) -> np.ndarray:
    """counts[a, b] = number of nodes with reference label a and estimated label b."""
    c_hat, c_star = _check_labels(c_hat, c_star, K)
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (c_star, c_hat), 1)
    return counts


def best_permutation(c_hat: np.ndarray, c_star: np.ndarray, K: int) -> np.ndarray:
    """pi with pi[estimated label] = reference label, maximizing agreements."""
    counts = confusion_matrix(c_hat, c_star, K)
    rows, cols = linear_sum_assignment(counts, maximize=True)
    pi = np.empty(K, dtype=np.int64)
    pi[cols] = rows
    return pi


def align_labels(c_hat: np.ndarray, c_star: np.ndarray, K: int) -> np.ndarray:
    return best_permutation(c_hat, c_star, K)[np.asarray(c_hat, dtype=np.int64)]


def hamming_error(c_hat: np.ndarray, c_star: np.ndarray, K: int) -> float:
    """
    Fraction of nodes whose labels disagree under the best relabeling.

    Args:
        c_hat: Estimated labels in [0, K)
        c_star: Reference labels in [0, K)
        K: Number of communities

    Returns:
        Error in [0, 1]; 0 means identical partitions.
    """
    counts = confusion_matrix(c_hat, c_star, K)
    n = int(counts.sum())
    if n == 0:
        return 0.0
    rows, cols = linear_sum_assignment(counts, maximize=True)
    agreements = int(counts[rows, cols].sum())
    return (n - agreements) / n
