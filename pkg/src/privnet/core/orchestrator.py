"""
Experiment Orchestrator
Async execution of experiment replications with a bounded worker pool,
per-replication error capture and deterministic result order, plus the
runners for each named experiment.
"""

import asyncio
import logging
import os
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from privnet.core.detection import detect
from privnet.core.errors import InvalidParameterError
from privnet.core.experiments import (
    ExperimentCell,
    ReplicationPlan,
    custom_cells,
    example1_cells,
    example2_cells,
    example3_cells,
    flip_sweep_cells,
    run_replication,
    uniform_eps_cells,
)
from privnet.core.model import MultiLayerNetwork, generate_synthetic
from privnet.core.rng import Purpose, name_key, seed_sequence
from privnet.core.settings import ExperimentConfig
from privnet.core.storage import ResultLogger
from privnet.reporting.engine import ReportingEngine

logger = logging.getLogger(__name__)


class Orchestrator:
    """Runs experiment replications concurrently with bounded workers and per-replication error capture."""

    def __init__(
        self,
        result_logger: Optional[ResultLogger] = None,
        max_workers: Optional[int] = None,
        show_progress: bool = True,
    ):
        self.result_logger = result_logger
        concurrency = max_workers or int(os.getenv("PRIVNET_MAX_WORKERS", 4))
        self.semaphore = asyncio.Semaphore(concurrency)
        self.show_progress = show_progress

    async def run_cell_replication(
        self,
        plan: ReplicationPlan,
        cell: ExperimentCell,
        replication: int,
        progress: Optional[tqdm] = None,
    ) -> Dict[str, Any]:
        """Execute one replication in a worker thread; failures become error records."""
        async with self.semaphore:
            logger.debug(f"Running {cell.experiment} cell {cell.index} replication {replication}")
            try:
                result = await asyncio.to_thread(run_replication, cell, replication, plan.seed, plan.algorithm)
                result["status"] = "success"
                result["error_message"] = None
            except Exception as e:
                logger.error(
                    f"{cell.experiment} cell {cell.index} ({cell.param_name}={cell.param_value}) "
                    f"replication {replication} failed: {e}"
                )
                logger.debug(traceback.format_exc())
                result = {
                    **cell.describe(),
                    "replication": replication,
                    "hamming_error": None,
                    "converged": False,
                    "notes": [],
                    "status": "error",
                    "error_message": f"{type(e).__name__}: {e}",
                }

        if self.result_logger is not None:
            await self.result_logger.log_result(result)
        if progress is not None:
            progress.update(1)
        return result

    async def run_experiment(self, plan: ReplicationPlan) -> List[Dict[str, Any]]:
        """Run every (cell, replication) pair; results come back ordered by (cell, replication)."""
        logger.info(f"Running {len(plan)} replications over {len(plan.cells)} cells")
        progress = tqdm(total=len(plan), desc="replications", disable=not self.show_progress)
        try:
            jobs = [self.run_cell_replication(plan, cell, r, progress) for cell, r in plan.items()]
            results = await asyncio.gather(*jobs)
        finally:
            progress.close()

        failures = sum(1 for r in results if r["status"] == "error")
        if failures:
            logger.warning(f"{failures} of {len(results)} replications failed")
        return sorted(results, key=lambda r: (r["cell"], r["replication"]))


async def run_cells(
    cfg: ExperimentConfig,
    cells: List[ExperimentCell],
    max_workers: Optional[int] = None,
    show_progress: bool = True,
) -> Tuple[List[Dict[str, Any]], Dict[str, str]]:
    """Run a cell list end to end: replications, raw JSONL and the report files."""
    out = Path(cfg.out)
    storage = ResultLogger(jsonl_dir=str(out / "raw"), experiment=cfg.experiment)
    orchestrator = Orchestrator(result_logger=storage, max_workers=max_workers, show_progress=show_progress)
    plan = ReplicationPlan(cells=cells, replications=cfg.replications, seed=cfg.seed, algorithm=cfg.algorithm)
    try:
        results = await orchestrator.run_experiment(plan)
    finally:
        await storage.close()
    paths = ReportingEngine(output_dir=str(out)).generate_report(results, cfg.experiment)
    paths["raw"] = str(storage.path)
    return results, paths


def _check_experiment(cfg: ExperimentConfig, expected: str):
    if cfg.experiment != expected:
        raise InvalidParameterError(f"expected a {expected} config, got {cfg.experiment}")


async def run_example1(cfg: ExperimentConfig, **kwargs) -> Dict[str, str]:
    """Uniform preferences f_i ~ Unif(0, b) over (n, L, b)."""
    _check_experiment(cfg, "example1")
    return (await run_cells(cfg, example1_cells(cfg), **kwargs))[1]


async def run_example2(cfg: ExperimentConfig, **kwargs) -> Dict[str, str]:
    """Near-public preferences with growing n or growing L."""
    _check_experiment(cfg, "example2")
    return (await run_cells(cfg, example2_cells(cfg), **kwargs))[1]


async def run_example3(cfg: ExperimentConfig, **kwargs) -> Dict[str, str]:
    """Polarized preferences with floor(2 n^a) strictly private nodes."""
    _check_experiment(cfg, "example3")
    return (await run_cells(cfg, example3_cells(cfg), **kwargs))[1]


async def run_uniform_eps(cfg: ExperimentConfig, **kwargs) -> Dict[str, str]:
    _check_experiment(cfg, "uniform-eps")
    return (await run_cells(cfg, uniform_eps_cells(cfg), **kwargs))[1]


async def run_custom(cfg: ExperimentConfig, **kwargs) -> Dict[str, str]:
    _check_experiment(cfg, "custom")
    return (await run_cells(cfg, custom_cells(cfg), **kwargs))[1]


def synthetic_sweep_network(cfg: ExperimentConfig) -> Tuple[MultiLayerNetwork, int]:
    """Stand-in network for the flip sweep when no file is given."""
    n, K, L = int(cfg.require("n")), int(cfg.require("K")), int(cfg.require("L"))
    network, _ = generate_synthetic(n, K, L, seed_sequence(cfg.seed, name_key(cfg.experiment), Purpose.GENERATE))
    return network, K


def sweep_reference(cfg: ExperimentConfig, network: MultiLayerNetwork, K: int) -> np.ndarray:
    """Communities detected on the unprivatized network; the sweep scores against these."""
    result = detect(
        network,
        K,
        seed=seed_sequence(cfg.seed, name_key(cfg.experiment), Purpose.DETECT),
        **cfg.algorithm.detect_kwargs(),
    )
    return result.labels


async def run_flip_sweep(
    cfg: ExperimentConfig,
    net: Optional[MultiLayerNetwork] = None,
    K: Optional[int] = None,
    **kwargs,
) -> Dict[str, str]:
    """
    Polarized flipping of one fixed network at increasing private shares beta.

    Without `net` a synthetic stand-in is generated from the config. The
    reference partition is the no-privacy detection on the same network.
    """
    _check_experiment(cfg, "flip-sweep")
    if net is None:
        net, K_config = synthetic_sweep_network(cfg)
        K = K if K is not None else K_config
    K = int(K if K is not None else cfg.require("K"))
    reference = await asyncio.to_thread(sweep_reference, cfg, net, K)
    logger.info(f"Reference partition community sizes: {np.bincount(reference, minlength=K).tolist()}")
    return (await run_cells(cfg, flip_sweep_cells(cfg, net, reference, K), **kwargs))[1]


EXPERIMENT_RUNNERS = {
    "example1": run_example1,
    "example2": run_example2,
    "example3": run_example3,
    "flip-sweep": run_flip_sweep,
    "uniform-eps": run_uniform_eps,
    "custom": run_custom,
}
