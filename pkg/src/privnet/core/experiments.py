"""
Experiment Definitions
Grid cells for the simulation studies and the single-replication pipeline
(generate, flip, debias, detect, score) the orchestrator runs for each of
them.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from privnet.core.detection import detect
from privnet.core.errors import InvalidParameterError
from privnet.core.evaluators import hamming_error
from privnet.core.model import MultiLayerNetwork, generate_synthetic
from privnet.core.privacy import (
    PrivacyProfile,
    constant_profile,
    debias,
    flip_matrix,
    flip_network,
    polarized_profile,
    profile_from_epsilon,
    uniform_profile,
)
from privnet.core.rng import Purpose, SeedLike, name_key, seed_sequence
from privnet.core.settings import AlgorithmSettings, ExperimentConfig

logger = logging.getLogger(__name__)

PREFERENCE_KINDS = ("uniform", "constant", "epsilon", "polarized")


@dataclass
class PreferenceSpec:
    """How a cell draws its privacy preferences."""
    kind: str
    low: float = 0.0
    high: float = 1.0
    value: float = 1.0
    epsilon: float = 1.0
    count: int = 0
    private_f: float = 0.0
    public_f: float = 1.0

    def __post_init__(self):
        if self.kind not in PREFERENCE_KINDS:
            raise InvalidParameterError(f"preference kind must be one of {PREFERENCE_KINDS}, got {self.kind!r}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PreferenceSpec":
        data = dict(data)
        kind = data.pop("kind", None)
        if kind is None:
            raise InvalidParameterError("preference needs a 'kind'")
        try:
            return cls(kind=kind, **data)
        except TypeError as exc:
            raise InvalidParameterError(f"bad preference fields {sorted(data)}: {exc}") from exc

    def build(self, n: int, seed: SeedLike = None) -> PrivacyProfile:
        if self.kind == "uniform":
            return uniform_profile(n, self.low, self.high, seed)
        if self.kind == "constant":
            return constant_profile(n, self.value)
        if self.kind == "epsilon":
            return profile_from_epsilon(n, self.epsilon)
        profile, _ = polarized_profile(n, self.count, self.private_f, self.public_f, seed)
        return profile


@dataclass(eq=False)
class ExperimentCell:
    """One grid point; `network` and `reference` are set when the cell reuses a fixed network."""
    index: int
    experiment: str
    n: int
    L: int
    K: int
    param_name: str
    param_value: float
    preference: PreferenceSpec
    scenario: Optional[str] = None
    sparsity: Optional[float] = None
    network: Optional[MultiLayerNetwork] = None
    reference: Optional[np.ndarray] = None

    def describe(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "cell": self.index,
            "scenario": self.scenario,
            "n": self.n,
            "L": self.L,
            "K": self.K,
            "param_name": self.param_name,
            "param_value": self.param_value,
        }


def _ints(values: List[Any]) -> List[int]:
    return [int(v) for v in values]


def example1_cells(cfg: ExperimentConfig) -> List[ExperimentCell]:
    """f_i ~ Unif(0, b) over the (n, L, b) grid."""
    K = int(cfg.require("K"))
    cells = []
    for n in _ints(cfg.grid("n")):
        for L in _ints(cfg.grid("L")):
            for b in cfg.grid("b"):
                cells.append(ExperimentCell(
                    index=len(cells), experiment=cfg.experiment, n=n, L=L, K=K,
                    param_name="b", param_value=float(b),
                    preference=PreferenceSpec("uniform", low=0.0, high=float(b)),
                ))
    return cells


def example2_cells(cfg: ExperimentConfig) -> List[ExperimentCell]:
    """f_i ~ Unif(low, high) with one growing axis per scenario."""
    K = int(cfg.require("K"))
    low, high = float(cfg.get("low", 0.95)), float(cfg.get("high", 1.0))
    cells = []
    for scenario in cfg.grid("scenarios"):
        param = scenario.get("param", "n")
        if param not in ("n", "L"):
            raise InvalidParameterError(f"scenario axis must be 'n' or 'L', got {param!r}")
        for n in _ints(scenario["n"]):
            for L in _ints(scenario["L"]):
                cells.append(ExperimentCell(
                    index=len(cells), experiment=cfg.experiment, n=n, L=L, K=K,
                    param_name=param, param_value=float(n if param == "n" else L),
                    preference=PreferenceSpec("uniform", low=low, high=high),
                    scenario=scenario.get("name", f"vary_{param}"),
                ))
    return cells


def strict_privacy_count(n: int, a: float) -> int:
    return int(math.floor(2.0 * n ** a))


def strict_privacy_level(n: int, L: int) -> float:
    return math.sqrt(math.log(n) / (n * L))


def sweep_private_count(beta: float, n: int) -> int:
    """floor(beta n); the offset absorbs products like 0.29 * 100 = 28.999999999999996."""
    return int(math.floor(beta * n + 1e-9))


def example3_cells(cfg: ExperimentConfig) -> List[ExperimentCell]:
    """floor(2 n^a) random nodes get f = sqrt(log n / (n L)); everyone else waives privacy."""
    K, L = int(cfg.require("K")), int(cfg.require("L"))
    cells = []
    for n in _ints(cfg.grid("n")):
        for a in cfg.grid("a"):
            cells.append(ExperimentCell(
                index=len(cells), experiment=cfg.experiment, n=n, L=L, K=K,
                param_name="a", param_value=float(a),
                preference=PreferenceSpec(
                    "polarized",
                    count=strict_privacy_count(n, float(a)),
                    private_f=strict_privacy_level(n, L),
                    public_f=1.0,
                ),
            ))
    return cells


def uniform_eps_cells(cfg: ExperimentConfig) -> List[ExperimentCell]:
    """Constant preferences so that every edge carries the same budget epsilon."""
    n, L, K = int(cfg.require("n")), int(cfg.require("L")), int(cfg.require("K"))
    return [
        ExperimentCell(
            index=i, experiment=cfg.experiment, n=n, L=L, K=K,
            param_name="epsilon", param_value=float(eps),
            preference=PreferenceSpec("epsilon", epsilon=float(eps)),
        )
        for i, eps in enumerate(cfg.grid("epsilon"))
    ]


def custom_cells(cfg: ExperimentConfig) -> List[ExperimentCell]:
    cells = []
    for spec in cfg.grid("cells"):
        preference = PreferenceSpec.from_dict(spec.get("preference", {"kind": "constant", "value": 1.0}))
        cells.append(ExperimentCell(
            index=len(cells), experiment=cfg.experiment,
            n=int(spec["n"]), L=int(spec["L"]), K=int(spec["K"]),
            param_name=spec.get("param_name", "cell"),
            param_value=float(spec.get("param_value", len(cells))),
            preference=preference,
            sparsity=spec.get("sparsity"),
        ))
    return cells


def flip_sweep_cells(
    cfg: ExperimentConfig,
    network: MultiLayerNetwork,
    reference: np.ndarray,
    K: int,
) -> List[ExperimentCell]:
    """floor(beta n) random nodes get private_f, the rest public_f, on one fixed network."""
    private_f = float(cfg.get("private_f", 0.02))
    public_f = float(cfg.get("public_f", 0.98))
    cells = []
    for beta in cfg.grid("beta"):
        beta = float(beta)
        if not 0.0 <= beta <= 1.0:
            raise InvalidParameterError(f"beta must lie in [0, 1], got {beta}")
        cells.append(ExperimentCell(
            index=len(cells), experiment=cfg.experiment, n=network.n, L=network.L, K=K,
            param_name="beta", param_value=beta,
            preference=PreferenceSpec(
                "polarized", count=sweep_private_count(beta, network.n), private_f=private_f, public_f=public_f,
            ),
            network=network,
            reference=np.asarray(reference, dtype=np.int64),
        ))
    return cells


def replication_key(cell: ExperimentCell, replication: int) -> tuple:
    return (name_key(cell.experiment), cell.index, replication)


def run_replication(
    cell: ExperimentCell,
    replication: int,
    seed: SeedLike,
    algorithm: Optional[AlgorithmSettings] = None,
) -> Dict[str, Any]:
    """
    Run one replication of a cell and score it.

    Every random step draws from its own substream keyed by
    (experiment, cell, replication, purpose), so results do not depend on
    scheduling or on how many replications run.
    """
    algorithm = algorithm or AlgorithmSettings()
    key = replication_key(cell, replication)
    if cell.network is None:
        network, params = generate_synthetic(
            cell.n, cell.K, cell.L, seed_sequence(seed, *key, Purpose.GENERATE), sparsity=cell.sparsity
        )
        truth = params.labels
    else:
        network, truth = cell.network, cell.reference

    profile = cell.preference.build(network.n, seed_sequence(seed, *key, Purpose.PREFERENCE))
    flipped = flip_network(network, flip_matrix(profile), seed_sequence(seed, *key, Purpose.FLIP))
    result = detect(
        debias(flipped, profile),
        cell.K,
        seed=seed_sequence(seed, *key, Purpose.DETECT),
        **algorithm.detect_kwargs(),
    )
    return {
        **cell.describe(),
        "replication": replication,
        "hamming_error": hamming_error(result.labels, truth, cell.K),
        "converged": result.converged,
        "notes": list(result.notes),
    }


@dataclass
class ReplicationPlan:
    """All (cell, replication) pairs of an experiment, in deterministic order."""
    cells: List[ExperimentCell]
    replications: int
    seed: int
    algorithm: AlgorithmSettings = field(default_factory=AlgorithmSettings)

    def items(self):
        for cell in self.cells:
            for r in range(self.replications):
                yield cell, r

    def __len__(self) -> int:
        return len(self.cells) * self.replications
