"""
Block Model
Degree-corrected multi-layer stochastic block model: parameters, the
probability tensor d_i d_j B(c_i, c_j, l), Bernoulli sampling of
symmetric multi-layer networks and the synthetic generator used in the
simulation studies.

Community labels are 0-based internally; files use 1-based ids.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from privnet.core.errors import DimensionMismatchError, InvalidParameterError
from privnet.core.rng import SeedLike, seed_sequence, substream
from privnet.core.tensor_ops import Tensor3, TensorLike

logger = logging.getLogger(__name__)


def membership_matrix(labels: np.ndarray, K: int) -> np.ndarray:
    """n x K binary matrix Z with Z[i, c_i] = 1."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise InvalidParameterError(f"labels must lie in [0, {K}), got range [{labels.min()}, {labels.max()}]")
    Z = np.zeros((labels.size, K))
    Z[np.arange(labels.size), labels] = 1.0
    return Z


@dataclass(eq=False)
class DcMsbmParams:
    """Ground truth of a DC-MSBM: labels c, degrees d, core B and optional sparsity s_n."""
    labels: np.ndarray
    degrees: np.ndarray
    core: Tensor3
    sparsity: Optional[float] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.degrees = np.asarray(self.degrees, dtype=np.float64)
        if not isinstance(self.core, Tensor3):
            self.core = Tensor3(np.asarray(self.core, dtype=np.float64))
        self.validate()

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def K(self) -> int:
        return self.core.dims[0]

    @property
    def L(self) -> int:
        return self.core.dims[2]

    def effective_core(self) -> np.ndarray:
        """Core scaled by s_n when given, exactly symmetric over modes 1 and 2."""
        B = self.core.as_float()
        B = 0.5 * (B + B.transpose(1, 0, 2))
        return B * self.sparsity if self.sparsity is not None else B

    def membership(self) -> np.ndarray:
        return membership_matrix(self.labels, self.K)

    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)

    def validate(self):
        K1, K2, L = self.core.dims
        if K1 != K2:
            raise DimensionMismatchError(f"core must be K x K x L, got {self.core.dims}")
        if self.labels.ndim != 1 or self.degrees.shape != self.labels.shape:
            raise DimensionMismatchError(
                f"labels {self.labels.shape} and degrees {self.degrees.shape} must be equal-length vectors"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= K1):
            raise InvalidParameterError(f"labels must lie in [0, {K1})")
        missing = np.flatnonzero(np.bincount(self.labels, minlength=K1) == 0)
        if missing.size:
            raise InvalidParameterError(f"communities {(missing + 1).tolist()} have no members")
        if not np.all(np.isfinite(self.degrees)) or np.any(self.degrees <= 0):
            raise InvalidParameterError("degrees must be positive and finite")
        B = self.core.as_float()
        if np.any(B < 0) or np.any(B > 1):
            raise InvalidParameterError("core entries must lie in [0, 1]")
        if not np.allclose(B, B.transpose(1, 0, 2), rtol=0.0, atol=1e-12):
            raise InvalidParameterError("core must be symmetric in its first two modes")
        if self.sparsity is not None and not (self.sparsity > 0):
            raise InvalidParameterError(f"sparsity must be positive, got {self.sparsity}")
        # largest d_i d_j B(c_i, c_j, l) is reached at the largest degree per community
        dmax = np.zeros(K1)
        np.maximum.at(dmax, self.labels, self.degrees)
        peak = np.max(dmax[:, None, None] * dmax[None, :, None] * self.effective_core())
        if peak > 1.0 + 1e-12:
            raise InvalidParameterError(f"edge probabilities exceed 1 (max d_i d_j B = {peak:.6g})")


@dataclass(frozen=True, eq=False)
class MultiLayerNetwork:
    """Binary n x n x L adjacency tensor, symmetric within every layer."""
    adjacency: Tensor3

    def __post_init__(self):
        adjacency = self.adjacency
        if not isinstance(adjacency, Tensor3):
            adjacency = Tensor3(np.asarray(adjacency))
        values = adjacency.values
        n1, n2, _ = adjacency.dims
        if n1 != n2:
            raise DimensionMismatchError(f"adjacency must be n x n x L, got {adjacency.dims}")
        if not np.all((values == 0) | (values == 1)):
            raise InvalidParameterError("adjacency entries must be 0 or 1")
        if values.dtype != np.uint8:
            adjacency = Tensor3(values.astype(np.uint8))
        if not adjacency.is_semi_symmetric():
            raise InvalidParameterError("adjacency must be symmetric in every layer")
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def n(self) -> int:
        return self.adjacency.dims[0]

    @property
    def L(self) -> int:
        return self.adjacency.dims[2]

    @property
    def values(self) -> np.ndarray:
        return self.adjacency.values

    def layer(self, l: int) -> np.ndarray:
        return self.adjacency.values[:, :, l]

    def density(self) -> float:
        return float(self.adjacency.values.mean())

    def subnetwork(self, nodes: np.ndarray) -> "MultiLayerNetwork":
        nodes = np.asarray(nodes, dtype=np.int64)
        return MultiLayerNetwork(Tensor3(self.values[np.ix_(nodes, nodes, np.arange(self.L))]))


def probability_tensor(p: DcMsbmParams) -> Tensor3:
    """P(i, j, l) = d_i d_j B(c_i, c_j, l)."""
    p.validate()
    B = p.effective_core()
    dd = np.outer(p.degrees, p.degrees)
    P = dd[:, :, None] * B[np.ix_(p.labels, p.labels, np.arange(p.L))]
    if P.max(initial=0.0) > 1.0:
        raise InvalidParameterError(f"probability tensor has entries above 1 ({P.max():.6g})")
    return Tensor3(P)


def _upper_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n)


def sample_network(prob: TensorLike, seed: SeedLike = None) -> MultiLayerNetwork:
    """
    Independent Bernoulli edges for i <= j (diagonal included) in every layer,
    mirrored to (j, i, l).
    """
    P = prob.as_float() if isinstance(prob, Tensor3) else np.asarray(prob, dtype=np.float64)
    if P.ndim != 3 or P.shape[0] != P.shape[1]:
        raise DimensionMismatchError(f"probability tensor must be n x n x L, got {P.shape}")
    if np.any(P < 0) or np.any(P > 1):
        raise InvalidParameterError("probabilities must lie in [0, 1]")
    if not np.array_equal(P, P.transpose(1, 0, 2)):
        raise InvalidParameterError("probability tensor must be symmetric in modes 1 and 2")
    n, _, L = P.shape
    rows, cols = _upper_pairs(n)
    rng = substream(seed)
    draws = rng.random((rows.size, L))
    upper = (draws < P[rows, cols, :]).astype(np.uint8)
    A = np.zeros((n, n, L), dtype=np.uint8, order="F")
    A[rows, cols, :] = upper
    A[cols, rows, :] = upper
    return MultiLayerNetwork(Tensor3(A))


def generate_synthetic(
    n: int,
    K: int,
    L: int,
    seed: SeedLike = None,
    sparsity: Optional[float] = None,
) -> Tuple[MultiLayerNetwork, DcMsbmParams]:
    """
    Draw a DC-MSBM and one network from it.

    Labels are uniform over the K communities (redrawn until every community
    is present), d_i ~ Unif(0.5, 1) and B(k1, k2, l) = 0.5 I(k1 = k2) + b with
    b ~ Unif(0, 0.5) drawn once per unordered community pair and layer.
    """
    if not (n >= K >= 1) or L < 1:
        raise InvalidParameterError(f"need n >= K >= 1 and L >= 1, got n={n}, K={K}, L={L}")
    rng = substream(seed, 0)
    labels = rng.integers(0, K, size=n)
    while np.unique(labels).size < K:
        labels = rng.integers(0, K, size=n)
    degrees = rng.uniform(0.5, 1.0, size=n)

    iu, ju = np.triu_indices(K)
    b = rng.uniform(0.0, 0.5, size=(iu.size, L))
    B = np.zeros((K, K, L))
    B[iu, ju, :] = b
    B[ju, iu, :] = b
    B += 0.5 * np.eye(K)[:, :, None]

    params = DcMsbmParams(labels=labels, degrees=degrees, core=Tensor3(B), sparsity=sparsity)
    network = sample_network(probability_tensor(params), seed_sequence(seed, 1))
    logger.debug(f"Generated DC-MSBM network n={n}, K={K}, L={L}, density={network.density():.4f}")
    return network, params
