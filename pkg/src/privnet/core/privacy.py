"""
Personalized Edge Flipping
Randomized response on multi-layer networks with keep-probability
theta(i, j) = (f_i f_j + 1) / 2, the heterogeneous edge-LDP budgets it
implies, the inverse map from budgets back to preferences, and the
debiasing shift that restores the block-model expectation.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import expit

from privnet.core.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NotRescalableError,
    UndefinedPreferenceError,
)
from privnet.core.model import DcMsbmParams, MultiLayerNetwork
from privnet.core.rng import SeedLike, substream
from privnet.core.tensor_ops import Tensor3

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class PrivacyProfile:
    """Node privacy preferences f in [0, 1]; 0 is full secrecy, 1 waives privacy."""
    f: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=np.float64)
        if self.f.ndim != 1:
            raise DimensionMismatchError(f"preferences must be a vector, got shape {self.f.shape}")
        if not np.all(np.isfinite(self.f)) or np.any(self.f < 0) or np.any(self.f > 1):
            raise InvalidParameterError("preferences must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.f.size)

    def pair_products(self) -> np.ndarray:
        return np.outer(self.f, self.f)


@dataclass(eq=False)
class FlipMatrix:
    """Symmetric keep-probabilities theta(i, j) in [1/2, 1]."""
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 2 or self.theta.shape[0] != self.theta.shape[1]:
            raise DimensionMismatchError(f"theta must be square, got {self.theta.shape}")
        if np.any(self.theta < 0.5) or np.any(self.theta > 1):
            raise InvalidParameterError("theta entries must lie in [1/2, 1]")
        if not np.array_equal(self.theta, self.theta.T):
            raise InvalidParameterError("theta must be symmetric")


@dataclass(eq=False)
class BudgetMatrix:
    """Per-edge privacy budgets eps(i, j); +inf where both endpoints waive privacy."""
    eps: np.ndarray

    def max_budget(self) -> float:
        """Uniform edge-LDP level implied by the heterogeneous budgets."""
        return float(np.max(self.eps))


@dataclass(eq=False)
class DebiasedTensor:
    values: Tensor3
    profile: PrivacyProfile


def flip_matrix(profile: PrivacyProfile) -> FlipMatrix:
    f = profile.f
    return FlipMatrix(0.5 * (np.outer(f, f) + 1.0))


def uniform_theta(eps: float) -> float:
    """Keep-probability e^eps / (1 + e^eps) of the uniform eps-edge-LDP flip."""
    if eps < 0:
        raise InvalidParameterError(f"epsilon must be nonnegative, got {eps}")
    return float(expit(eps))


def likelihood_ratio(theta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Largest ratio P(out | in) / P(out | in') of the flip kernel: theta / (1 - theta)."""
    theta = np.asarray(theta, dtype=np.float64)
    with np.errstate(divide="ignore"):
        ratio = theta / (1.0 - theta)
    return float(ratio) if ratio.ndim == 0 else ratio


def randomized_response(bits: np.ndarray, keep_prob: Union[float, np.ndarray], rng: np.random.Generator) -> np.ndarray:
    """Keep each bit with probability keep_prob, otherwise report 1 - bit."""
    bits = np.asarray(bits)
    keep = rng.random(bits.shape) < keep_prob
    return np.where(keep, bits, 1 - bits).astype(bits.dtype)


def flip_network(net: MultiLayerNetwork, theta: FlipMatrix, seed: SeedLike = None) -> MultiLayerNetwork:
    """
    One randomized-response draw per (i, j, l) with i <= j, reused for (j, i, l).

    Flips of the same node pair in different layers are independent.
    """
    n, L = net.n, net.L
    if theta.theta.shape != (n, n):
        raise DimensionMismatchError(f"theta is {theta.theta.shape} but the network has {n} nodes")
    rows, cols = np.triu_indices(n)
    rng = substream(seed)
    upper = randomized_response(net.values[rows, cols, :], theta.theta[rows, cols][:, None], rng)
    flipped = np.zeros((n, n, L), dtype=np.uint8, order="F")
    flipped[rows, cols, :] = upper
    flipped[cols, rows, :] = upper
    return MultiLayerNetwork(Tensor3(flipped))


def _budget_from_products(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log1p(x) - np.log1p(-x)


def privacy_budget(profile: PrivacyProfile) -> BudgetMatrix:
    """eps(i, j) = log((1 + f_i f_j) / (1 - f_i f_j)), +inf when f_i f_j = 1."""
    return BudgetMatrix(_budget_from_products(profile.pair_products()))


def preference_from_budgets(eps_i_iprime: float, eps_i_j: float, eps_iprime_j: float) -> float:
    """
    Recover f_i from the budgets of three edges among distinct nodes i, i', j.

    Uses 1 - 2 / (1 + e^eps) = tanh(eps / 2) = f_a f_b for every edge (a, b).
    """
    budgets = np.array([eps_i_iprime, eps_i_j, eps_iprime_j], dtype=np.float64)
    if np.any(np.isnan(budgets)) or np.any(budgets < 0):
        raise InvalidParameterError(f"budgets must be nonnegative, got {budgets.tolist()}")
    if budgets[2] == 0:
        raise UndefinedPreferenceError("eps(i', j) = 0 leaves f_i undetermined")
    products = np.tanh(budgets / 2.0)
    return float(np.sqrt(products[0] * products[1] / products[2]))


def recover_profile(budget: BudgetMatrix) -> PrivacyProfile:
    """Invert a full budget matrix node by node (needs n >= 3)."""
    eps = np.asarray(budget.eps, dtype=np.float64)
    n = eps.shape[0]
    if n < 3:
        raise UndefinedPreferenceError("at least three nodes are needed to recover preferences")
    iu, ju = np.triu_indices(n, k=1)
    order = np.argsort(-eps[iu, ju], kind="stable")
    f = np.empty(n)
    for i in range(n):
        for p in order:
            a, b = iu[p], ju[p]
            if a != i and b != i:
                f[i] = preference_from_budgets(eps[i, a], eps[i, b], eps[a, b])
                break
    return PrivacyProfile(np.clip(f, 0.0, 1.0))


def debias(flipped: MultiLayerNetwork, profile: PrivacyProfile) -> DebiasedTensor:
    """A~(i, j, l) = flipped(i, j, l) + (f_i f_j - 1) / 2."""
    if profile.n != flipped.n:
        raise DimensionMismatchError(f"profile has {profile.n} nodes but the network has {flipped.n}")
    shift = 0.5 * (profile.pair_products() - 1.0)
    values = flipped.values.astype(np.float64) + shift[:, :, None]
    return DebiasedTensor(values=Tensor3(values), profile=profile)


def rescale_debias(t: DebiasedTensor) -> Tensor3:
    """Divide by f_i f_j so the expectation is the original probability tensor. No clipping."""
    f = t.profile.f
    if np.any(f == 0):
        raise NotRescalableError(f"{int(np.sum(f == 0))} nodes have f_i = 0")
    return Tensor3(t.values.as_float() / np.outer(f, f)[:, :, None])


def expected_debiased(params: DcMsbmParams, profile: PrivacyProfile) -> Tensor3:
    """Noiseless debiased tensor: f_i f_j d_i d_j B(c_i, c_j, l)."""
    if profile.n != params.n:
        raise DimensionMismatchError(f"profile has {profile.n} nodes, model has {params.n}")
    fd = profile.f * params.degrees
    B = params.effective_core()
    return Tensor3(np.outer(fd, fd)[:, :, None] * B[np.ix_(params.labels, params.labels, np.arange(params.L))])


def constant_profile(n: int, value: float) -> PrivacyProfile:
    return PrivacyProfile(np.full(n, float(value)))


def profile_from_epsilon(n: int, eps: float) -> PrivacyProfile:
    """Constant profile whose every edge budget equals eps: f = sqrt((e^eps - 1) / (e^eps + 1))."""
    theta = uniform_theta(eps)
    return constant_profile(n, np.sqrt(2.0 * theta - 1.0))


def uniform_profile(n: int, low: float, high: float, seed: SeedLike = None) -> PrivacyProfile:
    if not 0 <= low <= high <= 1:
        raise InvalidParameterError(f"need 0 <= low <= high <= 1, got ({low}, {high})")
    return PrivacyProfile(substream(seed).uniform(low, high, size=n))


def polarized_profile(
    n: int,
    count: int,
    private_f: float,
    public_f: float = 1.0,
    seed: SeedLike = None,
) -> Tuple[PrivacyProfile, np.ndarray]:
    """`count` randomly chosen nodes get private_f, the rest public_f. Returns the chosen nodes too."""
    count = int(min(max(count, 0), n))
    chosen = np.sort(substream(seed).choice(n, size=count, replace=False))
    f = np.full(n, float(public_f))
    f[chosen] = private_f
    return PrivacyProfile(f), chosen
