import os
import sys

import numpy as np
import pytest

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")
sys.path.insert(0, os.path.join(ROOT, "src"))
sys.path.insert(0, ROOT)

from privnet.core.model import DcMsbmParams  # noqa: E402
from privnet.core.privacy import PrivacyProfile, expected_debiased  # noqa: E402
from privnet.core.tensor_ops import Tensor3  # noqa: E402


def random_params(rng: np.random.Generator, n: int, K: int, L: int) -> DcMsbmParams:
    """Balanced labels, degrees in [0.5, 1] and a core with a dominant diagonal."""
    labels = np.arange(n) % K
    rng.shuffle(labels)
    degrees = rng.uniform(0.5, 1.0, size=n)
    iu, ju = np.triu_indices(K)
    B = np.zeros((K, K, L))
    b = rng.uniform(0.0, 0.3, size=(iu.size, L))
    B[iu, ju, :] = b
    B[ju, iu, :] = b
    B += 0.6 * np.eye(K)[:, :, None]
    return DcMsbmParams(labels=labels, degrees=degrees, core=Tensor3(B))


def noiseless_tensor(rng: np.random.Generator, n: int, K: int, L: int):
    """Expected debiased tensor with preferences in [0.5, 1], and its model."""
    params = random_params(rng, n, K, L)
    profile = PrivacyProfile(rng.uniform(0.5, 1.0, size=n))
    return expected_debiased(params, profile), params, profile


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
