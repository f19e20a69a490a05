"""
Community Detection
Spectral clustering on the debiased tensor: semi-symmetric Tucker
embedding with ranks (K, K, min(K(K+1)/2, L)), row normalization and
K-medians on the normalized rows. Also the scree/elbow estimate of K.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from privnet.core.errors import InvalidParameterError
from privnet.core.model import MultiLayerNetwork, membership_matrix
from privnet.core.privacy import DebiasedTensor
from privnet.core.rng import SeedLike, substream
from privnet.core.tensor_ops import (
    Tensor3,
    TuckerFactors,
    matricize,
    mode_product,
    numerical_rank,
    truncated_svd,
    tucker,
)

logger = logging.getLogger(__name__)

ZERO_ROW_NORM = 1e-12

TensorInput = Union[DebiasedTensor, MultiLayerNetwork, Tensor3, np.ndarray]


@dataclass(eq=False)
class KMediansResult:
    labels: np.ndarray
    centers: np.ndarray
    objective: float
    converged: bool
    restart_objectives: List[float] = field(default_factory=list)
    history: List[float] = field(default_factory=list)

    @property
    def membership(self) -> np.ndarray:
        return membership_matrix(self.labels, self.centers.shape[0])


@dataclass(eq=False)
class DetectionResult:
    """Estimated communities and the intermediate embeddings they came from."""
    labels: np.ndarray
    membership: np.ndarray
    embedding: np.ndarray
    normalized_embedding: np.ndarray
    centers: np.ndarray
    objective: float
    converged: bool
    zero_rows: np.ndarray
    layer_rank: int
    tucker: Optional[TuckerFactors] = None
    notes: List[str] = field(default_factory=list)

    @property
    def K(self) -> int:
        return int(self.membership.shape[1])


@dataclass(eq=False)
class ScreeReport:
    kappa: int
    singular_values: np.ndarray
    suggested_K: int
    ratios: np.ndarray


def _tensor_values(t: TensorInput) -> np.ndarray:
    if isinstance(t, DebiasedTensor):
        return t.values.as_float()
    if isinstance(t, MultiLayerNetwork):
        return t.adjacency.as_float()
    if isinstance(t, Tensor3):
        return t.as_float()
    return Tensor3(np.asarray(t, dtype=np.float64)).values


def normalize_rows(U: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Scale rows to unit norm. Rows with norm below 1e-12 stay zero and are flagged."""
    U = np.asarray(U, dtype=np.float64)
    norms = np.linalg.norm(U, axis=1)
    zero = norms < ZERO_ROW_NORM
    out = np.zeros_like(U)
    out[~zero] = U[~zero] / norms[~zero, None]
    return out, zero


def l21_objective(X: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    """||Z W - X||_{2,1}: sum of row distances to the assigned centers."""
    return float(np.sum(np.linalg.norm(X - centers[labels], axis=1)))


def geometric_median(points: np.ndarray, start: np.ndarray, tol: float = 1e-8, max_iter: int = 100) -> np.ndarray:
    """Weiszfeld iterations from `start`; distances are floored to avoid division by zero."""
    y = np.asarray(start, dtype=np.float64).copy()
    for _ in range(max_iter):
        d = np.maximum(np.linalg.norm(points - y, axis=1), 1e-12)
        w = 1.0 / d
        y_new = (w[:, None] * points).sum(axis=0) / w.sum()
        step = np.linalg.norm(y_new - y)
        y = y_new
        if step < tol:
            break
    return y


def _farthest_point_seeds(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    m = X.shape[0]
    chosen = [int(rng.integers(m))]
    nearest = np.linalg.norm(X - X[chosen[0]], axis=1)
    for _ in range(1, K):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.linalg.norm(X - X[nxt], axis=1))
    return X[chosen].copy()


def _reseed_empty(X: np.ndarray, labels: np.ndarray, centers: np.ndarray, K: int) -> None:
    counts = np.bincount(labels, minlength=K)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return
    dist = np.linalg.norm(X - centers[labels], axis=1)
    for k in empty:
        p = int(np.argmax(dist))
        if dist[p] <= 0.0:
            break
        centers[k] = X[p]
        labels[p] = k
        dist[p] = 0.0


def _single_run(
    X: np.ndarray,
    K: int,
    rng: np.random.Generator,
    max_iter: int,
    median_tol: float,
    median_max_iter: int,
) -> Tuple[np.ndarray, np.ndarray, float, bool, List[float]]:
    centers = _farthest_point_seeds(X, K, rng)
    labels = np.argmin(cdist(X, centers), axis=1)
    _reseed_empty(X, labels, centers, K)
    objective = l21_objective(X, labels, centers)
    history = [objective]
    converged = False
    for _ in range(max_iter):
        old_labels = labels.copy()
        for k in range(K):
            members = X[labels == k]
            if members.shape[0] == 0:
                continue
            candidate = geometric_median(members, centers[k], median_tol, median_max_iter)
            old_cost = np.linalg.norm(members - centers[k], axis=1).sum()
            if np.linalg.norm(members - candidate, axis=1).sum() <= old_cost:
                centers[k] = candidate
        labels = np.argmin(cdist(X, centers), axis=1)
        _reseed_empty(X, labels, centers, K)
        new_objective = l21_objective(X, labels, centers)
        history.append(new_objective)
        improvement = objective - new_objective
        objective = new_objective
        if np.array_equal(labels, old_labels) and improvement <= median_tol * max(objective, 1.0):
            converged = True
            break
    return labels, centers, objective, converged, history


def k_medians(
    X: np.ndarray,
    K: int,
    tau: float = 0.1,
    restarts: int = 10,
    seed: SeedLike = None,
    max_iter: int = 100,
    median_tol: float = 1e-8,
    median_max_iter: int = 100,
) -> KMediansResult:
    """
    Approximate K-medians under the l_{2,1} objective.

    Each restart seeds by farthest-point traversal from a random first point,
    then alternates exact nearest-center assignment with geometric-median
    center updates. The restart with the lowest objective wins; ties go to the
    lowest restart index. `tau` is recorded but not certified.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidParameterError(f"X must be a matrix, got shape {X.shape}")
    n = X.shape[0]
    if K < 1 or n < K:
        raise InvalidParameterError(f"need 1 <= K <= n, got K={K}, n={n}")
    if tau < 0:
        raise InvalidParameterError(f"tau must be nonnegative, got {tau}")
    if restarts < 1:
        raise InvalidParameterError(f"restarts must be positive, got {restarts}")
    distinct = np.unique(X, axis=0).shape[0]
    if distinct < K:
        logger.warning(f"Only {distinct} distinct rows for K={K}; some clusters will be degenerate")
    logger.debug(f"K-medians with K={K}, tau={tau}, restarts={restarts}")

    best = None
    objectives = []
    for r in range(restarts):
        labels, centers, objective, converged, history = _single_run(
            X, K, substream(seed, r), max_iter, median_tol, median_max_iter
        )
        objectives.append(objective)
        if best is None or objective < best[2]:
            best = (labels, centers, objective, converged, history)

    labels, centers, objective, converged, history = best
    return KMediansResult(
        labels=labels,
        centers=centers,
        objective=objective,
        converged=converged,
        restart_objectives=objectives,
        history=history,
    )


def detect(
    t: TensorInput,
    K: int,
    tau: float = 0.1,
    restarts: int = 10,
    seed: SeedLike = None,
    tol: float = 1e-6,
    max_iter: int = 50,
    median_tol: float = 1e-8,
    median_max_iter: int = 100,
    kmedians_max_iter: int = 100,
) -> DetectionResult:
    """Recover K communities from a debiased multi-layer tensor."""
    values = _tensor_values(t)
    n, _, L = values.shape
    if K < 1 or K > n:
        raise InvalidParameterError(f"need 1 <= K <= n, got K={K}, n={n}")
    notes = []
    layer_target = min(K * (K + 1) // 2, L)
    _, s3, _ = truncated_svd(matricize(values, 3), min(L, n * n))
    layer_rank = max(1, min(layer_target, numerical_rank(s3)))
    if layer_rank < layer_target:
        notes.append(f"mode-3 rank truncated from {layer_target} to numerical rank {layer_rank}")
        logger.warning(notes[-1])

    factors = tucker(values, (K, K, layer_rank), shared_mode12=True, tol=tol, max_iter=max_iter)
    embedding = factors.U
    normalized, zero = normalize_rows(embedding)
    if zero.any():
        notes.append(f"{int(zero.sum())} zero embedding rows assigned after fitting")
        logger.warning(notes[-1])

    fit_rows = normalized[~zero] if (~zero).sum() >= K else normalized
    fit = k_medians(
        fit_rows,
        K,
        tau=tau,
        restarts=restarts,
        seed=seed,
        max_iter=kmedians_max_iter,
        median_tol=median_tol,
        median_max_iter=median_max_iter,
    )
    labels = np.argmin(cdist(normalized, fit.centers), axis=1)
    objective = l21_objective(normalized, labels, fit.centers)
    logger.debug(f"Detection finished: K={K}, objective={objective:.6g}, tucker iterations={factors.iterations}")

    return DetectionResult(
        labels=labels,
        membership=membership_matrix(labels, K),
        embedding=embedding,
        normalized_embedding=normalized,
        centers=fit.centers,
        objective=objective,
        converged=bool(factors.converged and fit.converged),
        zero_rows=zero,
        layer_rank=layer_rank,
        tucker=factors,
        notes=notes,
    )


def estimate_k(net: TensorInput, kappa: int, tol: float = 1e-6, max_iter: int = 50) -> ScreeReport:
    """
    Elbow estimate of K.

    Fits a rank-(kappa, kappa, L) Tucker model, projects the tensor on its
    layer factor and takes the leading min(2 kappa, n) singular values of the
    mode-1 unfolding. The suggestion is the k < kappa maximising
    sigma_k / sigma_{k+1}.
    """
    values = _tensor_values(net)
    n, _, L = values.shape
    if kappa < 2 or kappa > n:
        raise InvalidParameterError(f"kappa must lie in [2, {n}], got {kappa}")
    factors = tucker(values, (kappa, kappa, L), shared_mode12=True, tol=tol, max_iter=max_iter)
    projected = mode_product(values, factors.W.T, 3)
    count = min(2 * kappa, n)
    _, sigma, _ = truncated_svd(matricize(projected, 1), count)
    if sigma[0] <= 0:
        return ScreeReport(kappa=kappa, singular_values=sigma, suggested_K=1, ratios=np.ones(kappa - 1))
    floor = sigma[0] * 1e-12
    ratios = sigma[: kappa - 1] / np.maximum(sigma[1:kappa], floor)
    suggested = int(np.argmax(ratios)) + 1
    logger.info(f"Scree elbow after sigma_{suggested} (ratio {ratios[suggested - 1]:.4g}); suggested K={suggested}")
    return ScreeReport(kappa=kappa, singular_values=sigma, suggested_K=suggested, ratios=ratios)
