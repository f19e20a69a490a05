import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

# Ensure src is in path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from privnet.core import net_io
from privnet.core.detection import detect, estimate_k
from privnet.core.errors import PrivnetError
from privnet.core.evaluators import corollary_regime_check, diagnostics, hamming_error
from privnet.core.model import generate_synthetic
from privnet.core.orchestrator import EXPERIMENT_RUNNERS, run_flip_sweep
from privnet.core.privacy import (
    debias,
    flip_matrix,
    flip_network,
    privacy_budget,
    profile_from_epsilon,
    rescale_debias,
)
from privnet.core.rng import name_key, seed_sequence
from privnet.core.settings import EXPERIMENT_IDS, PROFILES, load_settings

logger = logging.getLogger("privnet")


def setup_logging(level: str = None):
    level = (level or os.getenv("PRIVNET_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Personalized edge-flipping privacy and community detection for multi-layer networks")
    parser.add_argument("--seed", type=int, help="Master seed (default from config or PRIVNET_SEED)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--config", help="YAML file merged over the packaged defaults")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Sample a synthetic DC-MSBM network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--sparsity", type=float, help="Scale the core by s_n")

    p = sub.add_parser("flip", help="Privatize a network by personalized edge flipping")
    p.add_argument("--network", required=True, help="Layered edge list")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--preferences", help="Preference file 'node_id f'")
    source.add_argument("--epsilon-uniform", type=float, help="Same budget epsilon on every edge")

    p = sub.add_parser("debias", help="Shift a flipped network back to block-model expectation")
    p.add_argument("--network", required=True, help="Flipped layered edge list")
    p.add_argument("--preferences", required=True)
    p.add_argument("--rescale", action="store_true", help="Also divide by f_i f_j")
    p.add_argument("--tensor-out", default="debiased.npy", help="File name under --out (.npy or text)")

    p = sub.add_parser("detect", help="Detect K communities")
    p.add_argument("--K", type=int, required=True)
    given = p.add_mutually_exclusive_group(required=True)
    given.add_argument("--tensor", help="Debiased tensor (.npy or text)")
    given.add_argument("--network", help="Layered edge list, debiased on the fly with --preferences")
    p.add_argument("--preferences", help="Preference file; omit for an unprivatized network")

    p = sub.add_parser("evaluate", help="Hamming error of estimated labels")
    p.add_argument("--labels", required=True, help="Estimated labels 'node_id label'")
    reference = p.add_mutually_exclusive_group(required=True)
    reference.add_argument("--truth", help="Ground truth 'node_id community degree'")
    reference.add_argument("--reference", help="Reference labels 'node_id label'")
    p.add_argument("--K", type=int, required=True)

    p = sub.add_parser("estimate-k", help="Scree/elbow estimate of K")
    p.add_argument("--kappa", type=int, required=True, help="Upper bound on K")
    given = p.add_mutually_exclusive_group(required=True)
    given.add_argument("--tensor")
    given.add_argument("--network")

    p = sub.add_parser("budget", help="Per-edge privacy budgets of a preference profile")
    p.add_argument("--preferences", required=True)

    p = sub.add_parser("diagnostics", help="Theory quantities for a model and a preference profile")
    p.add_argument("--truth", required=True, help="Ground truth written by generate")
    p.add_argument("--core", required=True, help="Core tensor written by generate")
    p.add_argument("--preferences", required=True)
    p.add_argument("--sparsity", type=float)
    p.add_argument("--scenario", choices=["uniform", "polarized"], help="Also check a preference regime")

    p = sub.add_parser("experiment", help="Run a named simulation study")
    p.add_argument("experiment_id", choices=EXPERIMENT_IDS)
    p.add_argument("--profile", choices=PROFILES, help="desk (default) or full grids")
    p.add_argument("--replications", type=int, help="Override R")
    p.add_argument("--workers", type=int, help="Concurrent replications")
    p.add_argument("--network", help="flip-sweep: layered edge list instead of the synthetic stand-in")
    p.add_argument("--K", type=int, help="flip-sweep: number of communities in --network")
    p.add_argument("--giant-component", action="store_true",
                   help="flip-sweep: keep only nodes in every layer's giant component")
    p.add_argument("--quiet", action="store_true", help="No progress bar")
    return parser


def _load_tensor_or_network(args):
    if getattr(args, "tensor", None):
        return net_io.read_tensor(args.tensor)
    network = net_io.read_layered_edgelist(args.network)
    preferences = getattr(args, "preferences", None)
    if preferences:
        return debias(network, net_io.read_preferences(preferences, network.n))
    return network


async def run_command(args, settings) -> int:
    out = Path(settings.out)
    seed = settings.seed

    if args.command == "generate":
        network, params = generate_synthetic(
            args.n, args.K, args.L, seed_sequence(seed, name_key("generate")), sparsity=args.sparsity
        )
        net_io.write_layered_edgelist(network, out / "network.txt")
        net_io.write_params(params, out / "truth.txt", out / "core.txt")
        logger.info(f"Network, ground truth and core written to {out}")

    elif args.command == "flip":
        network = net_io.read_layered_edgelist(args.network)
        if args.preferences:
            profile = net_io.read_preferences(args.preferences, network.n)
        else:
            profile = profile_from_epsilon(network.n, args.epsilon_uniform)
            net_io.write_preferences(profile, out / "preferences.txt")
        flipped = flip_network(network, flip_matrix(profile), seed_sequence(seed, name_key("flip")))
        net_io.write_layered_edgelist(flipped, out / "flipped.txt")
        logger.info(f"Flipped network written to {out / 'flipped.txt'}")

    elif args.command == "debias":
        network = net_io.read_layered_edgelist(args.network)
        debiased = debias(network, net_io.read_preferences(args.preferences, network.n))
        tensor = rescale_debias(debiased) if args.rescale else debiased.values
        net_io.write_tensor(tensor, out / args.tensor_out)
        logger.info(f"Debiased tensor written to {out / args.tensor_out}")

    elif args.command == "detect":
        result = detect(
            _load_tensor_or_network(args), args.K,
            seed=seed_sequence(seed, name_key("detect")), **settings.algorithm.detect_kwargs(),
        )
        net_io.write_labels(result.labels, out / "labels.txt")
        for note in result.notes:
            logger.info(note)
        print(f"objective={result.objective!r}")
        print(f"converged={result.converged}")

    elif args.command == "evaluate":
        labels = net_io.read_labels(args.labels)
        if args.truth:
            reference, _ = net_io.read_ground_truth(args.truth, labels.size)
        else:
            reference = net_io.read_labels(args.reference, labels.size)
        print(f"hamming_error={hamming_error(labels, reference, args.K)!r}")

    elif args.command == "estimate-k":
        report = estimate_k(
            _load_tensor_or_network(args), args.kappa,
            tol=settings.algorithm.tucker_tol, max_iter=settings.algorithm.tucker_max_iter,
        )
        net_io.write_scree(report.singular_values, out / "scree.csv")
        print(f"suggested_K={report.suggested_K}")

    elif args.command == "budget":
        budget = privacy_budget(net_io.read_preferences(args.preferences))
        net_io.write_budget(budget, out / "budget.csv")
        print(f"max_budget={budget.max_budget()!r}")

    elif args.command == "diagnostics":
        params = net_io.read_params(args.truth, args.core, sparsity=args.sparsity)
        profile = net_io.read_preferences(args.preferences, params.n)
        values = diagnostics(params, profile).as_dict()
        if args.scenario:
            regime = corollary_regime_check(profile, params, args.scenario)
            values.update({f"regime_{k}": v for k, v in regime.as_dict().items()})
        net_io.write_report(values, out / "diagnostics.txt")
        for key, value in values.items():
            print(f"{key}={value}")

    elif args.command == "experiment":
        cfg = settings.experiment(args.experiment_id, args.replications)
        kwargs = {"max_workers": settings.max_workers, "show_progress": not args.quiet}
        if args.experiment_id == "flip-sweep" and args.network:
            network = net_io.read_layered_edgelist(args.network)
            if args.giant_component:
                _, network = net_io.giant_component_intersection(network)
                if network is None:
                    raise PrivnetError("giant-component intersection is empty")
            paths = await run_flip_sweep(cfg, network, args.K, **kwargs)
        else:
            paths = await EXPERIMENT_RUNNERS[args.experiment_id](cfg, **kwargs)
        for kind, path in paths.items():
            logger.info(f"{kind}: {path}")

    return 0


async def main(argv=None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        settings = load_settings(
            config_path=args.config,
            profile=getattr(args, "profile", None),
            seed=args.seed,
            out=args.out,
            max_workers=getattr(args, "workers", None),
        )
        return await run_command(args, settings)
    except (PrivnetError, OSError) as e:
        print(f"privnet: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
