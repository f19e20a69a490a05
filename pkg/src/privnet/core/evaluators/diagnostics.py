"""
Theory Diagnostics
Quantities behind the consistency bound for privatized community
detection: effective community sizes, the privacy-weighted degree mean,
the noise level phi_n, the per-community variance terms and the bound
itself, plus checks of the regularity assumptions and of the two
preference regimes (near-uniform and polarized).

Everything here is a rate value without absolute constants. It is meant
for inspection next to an experiment, never as a guarantee.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

from privnet.core.errors import DimensionMismatchError, InvalidParameterError
from privnet.core.model import DcMsbmParams
from privnet.core.privacy import PrivacyProfile
from privnet.core.tensor_ops import matricize, numerical_rank, truncated_svd

logger = logging.getLogger(__name__)

SCENARIOS = ("uniform", "polarized")


@dataclass
class AssumptionConstants:
    """Constants plugged into the regularity checks."""
    size_ratio: float = 2.0
    gamma_ratio: float = 2.0
    degree_bound: float = 10.0
    sparsity_margin: float = 1.0
    signal_margin: float = 0.1


@dataclass(eq=False)
class DiagnosticsReport:
    gamma: np.ndarray
    psi_bar: float
    phi_n: float
    v: np.ndarray
    bound: float
    sigma_min_B: float
    sparsity: float
    community_sizes: np.ndarray
    assumption_flags: Dict[str, bool] = field(default_factory=dict)
    infinite_v: bool = False

    def as_dict(self) -> Dict[str, object]:
        """Flat key/value view used by the text report; vectors are 1-based per community."""
        out: Dict[str, object] = {
            "n": int(self.community_sizes.sum()),
            "K": int(self.gamma.size),
            "sparsity": self.sparsity,
            "psi_bar": self.psi_bar,
            "phi_n": self.phi_n,
            "sum_v": float(np.sum(self.v)),
            "bound": self.bound,
            "sigma_min_B": self.sigma_min_B,
            "infinite_v": self.infinite_v,
        }
        for k in range(self.gamma.size):
            out[f"n_{k + 1}"] = int(self.community_sizes[k])
            out[f"gamma_{k + 1}"] = float(self.gamma[k])
            out[f"v_{k + 1}"] = float(self.v[k])
        for name, flag in self.assumption_flags.items():
            out[f"assumption_{name}"] = flag
        return out


@dataclass
class RegimeReport:
    scenario: str
    lhs: float
    rhs: float
    passes: bool
    details: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        out = asdict(self)
        details = out.pop("details")
        out.update({f"detail_{k}": v for k, v in details.items()})
        return out


def _sparsity(params: DcMsbmParams) -> float:
    if params.sparsity is not None:
        return float(params.sparsity)
    return float(params.core.as_float().max())


def _check_sizes(params: DcMsbmParams, profile: PrivacyProfile):
    if profile.n != params.n:
        raise DimensionMismatchError(f"profile has {profile.n} nodes, model has {params.n}")


def diagnostics(
    params: DcMsbmParams,
    profile: PrivacyProfile,
    constants: Optional[AssumptionConstants] = None,
) -> DiagnosticsReport:
    """
    Evaluate the theory quantities of a model instance under a preference profile.

    Args:
        params: Ground-truth DC-MSBM parameters
        profile: Node privacy preferences
        constants: Constants for the assumption checks (defaults if omitted)

    Returns:
        DiagnosticsReport with every field computed from its definition.
    """
    _check_sizes(params, profile)
    constants = constants or AssumptionConstants()
    n, K, L = params.n, params.K, params.L
    labels = params.labels
    fd2 = (profile.f * params.degrees) ** 2
    sizes = params.community_sizes()
    s_n = _sparsity(params)

    gamma = np.bincount(labels, weights=fd2, minlength=K)
    psi_bar = float(fd2.mean())
    phi_n = float(1.0 - profile.f.min() + 4.0 * s_n)

    v = np.zeros(K)
    infinite_v = False
    for k in range(K):
        members = fd2[labels == k]
        if np.any(members == 0):
            v[k] = np.inf
            infinite_v = True
            continue
        v[k] = gamma[k] * np.sum(1.0 / members) / sizes[k] ** 2
    if infinite_v:
        logger.warning("Some nodes have f_i d_i = 0; their community variance terms are infinite")

    total_v = float(np.sum(v))
    if psi_bar <= 0 or s_n <= 0 or not np.isfinite(total_v):
        bound = math.inf
    else:
        bound = math.sqrt(total_v) * math.sqrt(phi_n * math.log(n)) / (math.sqrt(n * L) * s_n * psi_bar)

    mode3 = matricize(params.effective_core(), 3)
    _, s, _ = truncated_svd(mode3, min(mode3.shape))
    rank = numerical_rank(s)
    sigma_min = float(s[rank - 1]) if rank else 0.0

    flags = {
        "community_size": bool(sizes.max() <= constants.size_ratio * sizes.min()),
        "effective_size": bool(
            gamma.min() > 0
            and gamma.max() <= constants.gamma_ratio * gamma.min()
            and np.all(fd2 <= constants.degree_bound * gamma[labels] / sizes[labels])
        ),
        "sparsity": bool(
            psi_bar > 0
            and s_n >= constants.sparsity_margin * math.sqrt(phi_n * math.log(n) / (n * L)) / psi_bar
        ),
        "signal": bool(sigma_min >= constants.signal_margin * math.sqrt(L) * s_n),
    }
    failed = [name for name, ok in flags.items() if not ok]
    if failed:
        logger.info(f"Assumption checks failing at the given constants: {', '.join(failed)}")

    return DiagnosticsReport(
        gamma=gamma,
        psi_bar=psi_bar,
        phi_n=phi_n,
        v=v,
        bound=bound,
        sigma_min_B=sigma_min,
        sparsity=s_n,
        community_sizes=sizes,
        assumption_flags=flags,
        infinite_v=infinite_v,
    )


def corollary_regime_check(
    profile: PrivacyProfile,
    params: DcMsbmParams,
    scenario: str,
    private_threshold: float = 0.5,
) -> RegimeReport:
    """
    Compare both sides of the finite-sample proxy for a preference regime.

    uniform: f_min^4 must exceed log n / (n L s_n^2).
    polarized: nodes with f below `private_threshold` form the private set S
    with share beta and mean preference alpha; beta / (alpha^2 (1 - beta))
    must stay below n L s_n^2 / log n.
    """
    _check_sizes(params, profile)
    if scenario not in SCENARIOS:
        raise InvalidParameterError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    n, L = params.n, params.L
    s_n = _sparsity(params)
    f = profile.f

    if scenario == "uniform":
        f_min, f_max = float(f.min()), float(f.max())
        lhs = f_min ** 4
        rhs = math.log(n) / (n * L * s_n ** 2)
        details = {
            "f_min": f_min,
            "f_max": f_max,
            "f_ratio": f_max / f_min if f_min > 0 else math.inf,
        }
        return RegimeReport(scenario, lhs, rhs, bool(lhs > rhs), details)

    private = f < private_threshold
    beta = float(private.mean())
    rhs = n * L * s_n ** 2 / math.log(n)
    if beta == 0.0:
        lhs = 0.0
        alpha = math.nan
    else:
        alpha = float(f[private].mean())
        if alpha == 0.0 or beta == 1.0:
            lhs = math.inf
        else:
            lhs = beta / (alpha ** 2 * (1.0 - beta))
    details = {
        "beta": beta,
        "alpha": alpha,
        "private_count": int(private.sum()),
        "tradeoff_ratio": lhs / rhs,
    }
    return RegimeReport(scenario, lhs, rhs, bool(lhs < rhs), details)
