"""
Settings
Layered configuration: packaged YAML defaults, then environment variables
(PRIVNET_SEED, PRIVNET_MAX_WORKERS), then an optional --config YAML file,
then explicit command-line values.
"""

import copy
import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv

from privnet.core.errors import InvalidParameterError

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
EXPERIMENT_IDS = ("example1", "example2", "example3", "flip-sweep", "uniform-eps", "custom")
PROFILES = ("desk", "full")


def load_yaml(path) -> Dict[str, Any]:
    """Load a YAML mapping; a missing file is an empty mapping with a warning."""
    path = Path(path)
    if not path.exists():
        logger.warning(f"Config path {path} not found. Using empty mapping.")
        return {}
    with open(path, "r") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidParameterError(f"{path} must hold a mapping at top level")
    return data


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values in `override` win, lists are replaced whole."""
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class AlgorithmSettings:
    tucker_tol: float = 1e-6
    tucker_max_iter: int = 50
    tau: float = 0.1
    restarts: int = 10
    median_tol: float = 1e-8
    median_max_iter: int = 100
    kmedians_max_iter: int = 100

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AlgorithmSettings":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown algorithm settings: {sorted(unknown)}")
        settings = cls(**data)
        settings.validate()
        return settings

    def validate(self):
        if self.tucker_tol <= 0 or self.median_tol <= 0:
            raise InvalidParameterError("tolerances must be positive")
        if self.tau < 0:
            raise InvalidParameterError(f"tau must be nonnegative, got {self.tau}")
        if min(self.restarts, self.median_max_iter, self.kmedians_max_iter) < 1 or self.tucker_max_iter < 0:
            raise InvalidParameterError("iteration counts and restarts must be positive")

    def detect_kwargs(self) -> Dict[str, Any]:
        """Keyword arguments for `detection.detect`."""
        return {
            "tau": self.tau,
            "restarts": self.restarts,
            "tol": self.tucker_tol,
            "max_iter": self.tucker_max_iter,
            "median_tol": self.median_tol,
            "median_max_iter": self.median_max_iter,
            "kmedians_max_iter": self.kmedians_max_iter,
        }


@dataclass
class ExperimentConfig:
    """One experiment's grid section plus the run-level values it needs."""
    experiment: str
    params: Dict[str, Any]
    replications: int
    seed: int
    out: str = "results"
    algorithm: AlgorithmSettings = field(default_factory=AlgorithmSettings)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.experiment not in EXPERIMENT_IDS:
            raise InvalidParameterError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENT_IDS}")
        if int(self.replications) < 1:
            raise InvalidParameterError(f"replications must be at least 1, got {self.replications}")
        for key, value in self.params.items():
            if isinstance(value, list) and not value:
                raise InvalidParameterError(f"grid {self.experiment}.{key} is empty")

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def require(self, key: str) -> Any:
        if key not in self.params:
            raise InvalidParameterError(f"experiment {self.experiment} needs '{key}'")
        return self.params[key]

    def grid(self, key: str) -> List[Any]:
        """A grid axis as a list; scalars become one-point grids."""
        value = self.require(key)
        values = value if isinstance(value, list) else [value]
        if not values:
            raise InvalidParameterError(f"grid {self.experiment}.{key} is empty")
        return values


@dataclass
class Settings:
    algorithm: AlgorithmSettings
    seed: int
    max_workers: int
    profile: str
    out: str
    experiments: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def experiment(self, experiment_id: str, replications: Optional[int] = None) -> ExperimentConfig:
        if experiment_id not in self.experiments:
            raise InvalidParameterError(
                f"experiment {experiment_id!r} not defined in profile '{self.profile}'"
            )
        params = copy.deepcopy(self.experiments[experiment_id])
        reps = replications if replications is not None else params.pop("replications", 1)
        params.pop("replications", None)
        return ExperimentConfig(
            experiment=experiment_id,
            params=params,
            replications=int(reps),
            seed=self.seed,
            out=self.out,
            algorithm=self.algorithm,
        )


def _env_overrides() -> Dict[str, Any]:
    runtime = {}
    if os.getenv("PRIVNET_SEED"):
        runtime["seed"] = int(os.environ["PRIVNET_SEED"])
    if os.getenv("PRIVNET_MAX_WORKERS"):
        runtime["max_workers"] = int(os.environ["PRIVNET_MAX_WORKERS"])
    return {"runtime": runtime} if runtime else {}


def load_settings(
    config_path: Optional[str] = None,
    profile: Optional[str] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    max_workers: Optional[int] = None,
) -> Settings:
    """
    Build the effective settings.

    Args:
        config_path: Optional YAML file with `algorithm`, `runtime` and
            `experiments.<id>` sections, merged over the packaged defaults
        profile: Experiment profile name (`desk` or `full`)
        seed: Master seed; overrides every other source
        out: Output directory
        max_workers: Concurrent replications

    Returns:
        Validated Settings
    """
    load_dotenv()
    merged = load_yaml(CONFIG_DIR / "defaults.yaml")
    merged = deep_merge(merged, _env_overrides())
    user = load_yaml(config_path) if config_path else {}
    merged = deep_merge(merged, {k: v for k, v in user.items() if k != "experiments"})

    runtime = merged.get("runtime", {})
    profile = profile or runtime.get("profile", "desk")
    if profile not in PROFILES:
        raise InvalidParameterError(f"unknown profile {profile!r}; choose from {PROFILES}")

    registry = load_yaml(CONFIG_DIR / "experiments.yaml")
    experiments = deep_merge(registry.get(profile, {}), user.get("experiments", {}))

    settings = Settings(
        algorithm=AlgorithmSettings.from_dict(merged.get("algorithm", {})),
        seed=int(seed if seed is not None else runtime.get("seed", 20240101)),
        max_workers=int(max_workers if max_workers is not None else runtime.get("max_workers", 4)),
        profile=profile,
        out=str(out if out is not None else runtime.get("out", "results")),
        experiments=experiments,
    )
    if settings.max_workers < 1:
        raise InvalidParameterError(f"max_workers must be positive, got {settings.max_workers}")
    logger.debug(f"Settings: profile={profile}, seed={settings.seed}, workers={settings.max_workers}")
    return settings
