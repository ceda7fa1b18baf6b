#!/usr/bin/env python3
"""
DP KDE - command-line entry point

Usage:
    python run.py build --gen uniform:n=1000,d=2,R=1 --kernel l1 --epsilon 1 --out tree.json
    python run.py query --structure tree.json --point 0.25,0.75
    python run.py bench --plan fig2-style --out results.csv

Machine output (answers, summaries, CSV) goes to standard output, diagnostics
to standard error. Exit codes: 0 success, 1 invalid input or I/O failure,
2 usage error.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

# Project root
PROJECT_ROOT = Path(__file__).parent.parent

if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.bench.harness import comparison_table, results_csv, run_plans, write_results  # noqa: E402
from src.config.config import ConfigManager, SystemConfig, load_plans  # noqa: E402
from src.data.dataset import Dataset, load_csv, load_dataset, parse_generator_spec  # noqa: E402
from src.embedding.l2kde import L2KdeStructure, init_l2  # noqa: E402
from src.logger.logger import configure_logging, get_logger  # noqa: E402
from src.privacy.noise import STREAM_TREE, STREAM_TRIAL, NoiseStream  # noqa: E402
from src.trees.baseline import CountingTree, baseline_builder  # noqa: E402
from src.trees.codec import load_structure, save_structure  # noqa: E402
from src.trees.l1tree import NoisyL1Tree  # noqa: E402
from src.trees.lptree import NoisyLpTree, init_lp_high_dim  # noqa: E402
from src.trees.multidim import HighDimTree, init_high_dim  # noqa: E402

logger = get_logger("cli")

KERNELS = ("l1", "l2", "lpp", "baseline")
FRESH_NOISE_WARNING = (
    "--fresh-noise rebuilds the structure with new noise for every answer; "
    "it is a Monte-Carlo aid and NOT a differentially private deployment"
)


def u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= value < (1 << 64):
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return value


def parse_point(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise ValueError(f"--point must be comma-separated decimals, got {text!r}")


def add_source_arguments(parser: argparse.ArgumentParser, required: bool) -> None:
    source = parser.add_mutually_exclusive_group(required=required)
    source.add_argument("--data", help="CSV file, one point per row (searched in DP_KDE_DATA_DIR)")
    source.add_argument("--gen", help="generator, e.g. uniform:n=1000,d=2,R=1")
    parser.add_argument("--header", action="store_true", help="skip the first CSV line")
    parser.add_argument("--shift-to-domain", action="store_true", help="subtract column minima instead of rejecting negatives")
    parser.add_argument("--R", type=positive_float, default=None, help="value bound (default: from the data)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dp-kde",
        description="Differentially private distance-sum KDE with noisy balanced trees.",
    )
    parser.add_argument("--seed", type=u64, default=None, help="root seed (u64, default DP_KDE_SEED or 0xDEADBEEF)")
    parser.add_argument("--env-file", default=".env", help="optional .env file")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="build a structure and write it to a file")
    add_source_arguments(build, required=True)
    build.add_argument("--kernel", choices=KERNELS, default="l1")
    build.add_argument("--p", type=positive_int, default=2, help="exponent for --kernel lpp (1..16)")
    build.add_argument("--alpha", type=positive_float, default=0.5, help="l2 distortion / baseline band ratio")
    build.add_argument("--epsilon", type=positive_float, default=1.0, help="total privacy budget")
    build.add_argument("--no-noise", action="store_true", help="exact structure (not private)")
    build.add_argument("--range-mode", choices=("data", "public"), default="data", help="l2 coordinate range")
    build.add_argument("--out", required=True, help="structure file to write")

    query = sub.add_parser("query", help="answer a distance-sum query from a structure file")
    query.add_argument("--structure", required=True, help="structure file written by build")
    query.add_argument("--point", required=True, help="query point, comma-separated")
    query.add_argument("--fresh-noise", action="store_true", help="rebuild from --data/--gen with new noise per answer")
    query.add_argument("--trials", type=positive_int, default=1, help="answers to print with --fresh-noise")
    add_source_arguments(query, required=False)

    bench = sub.add_parser("bench", help="run a named plan or a plan file and emit CSV")
    bench.add_argument("--plan", default=None, help="plan name or YAML file (default DP_KDE_DEFAULT_PLAN)")
    bench.add_argument("--out", default=None, help="CSV file (default: standard output)")
    bench.add_argument("--timing", action="store_true", help="fill the timing columns")
    bench.add_argument("--trials", type=positive_int, default=None, help="override trials per grid point")
    bench.add_argument("--workers", type=positive_int, default=None, help="threads per grid point")
    return parser


def load_settings(args: argparse.Namespace) -> SystemConfig:
    manager = ConfigManager(env_file=args.env_file)
    config = manager.load()
    level = "DEBUG" if args.verbose else "ERROR" if args.quiet else config.log.level
    configure_logging(config.log.model_copy(update={"level": level}))
    args.manager = manager
    if args.seed is None:
        args.seed = config.noise.seed
    return config


def load_source(args: argparse.Namespace, config: SystemConfig, R: Optional[float] = None) -> Dataset:
    bound = args.R if args.R is not None else R
    if args.data:
        return load_csv(
            args.data, R=bound, header=args.header, shift_to_domain=args.shift_to_domain,
            data_dir=config.data.data_dir,
        )
    descriptor = parse_generator_spec(args.gen)
    if bound is not None:
        descriptor = descriptor.model_copy(update={"R": bound})
    return load_dataset(descriptor, seed=args.seed)


def build_structure(kernel: str, dataset: Dataset, params: Dict[str, Any], add_noise: bool, root: NoiseStream):
    epsilon = params["epsilon"]
    if kernel == "l1":
        return init_high_dim(dataset.points, dataset.R, epsilon, add_noise, root.child(STREAM_TREE))
    if kernel == "lpp":
        return init_lp_high_dim(dataset.points, dataset.R, epsilon, params["p"], add_noise, root.child(STREAM_TREE))
    if kernel == "baseline":
        return init_high_dim(
            dataset.points, dataset.R, epsilon, add_noise, root.child(STREAM_TREE),
            builder=baseline_builder(params["alpha"]),
        )
    return init_l2(
        dataset.points, params["R"], epsilon, params["alpha"], add_noise, root,
        embedding_seed=params.get("embedding_seed"), range_mode=params.get("range_mode", "data"),
    )


def structure_params(structure) -> Dict[str, Any]:
    """Kernel and parameters needed to rebuild ``structure`` on other data."""
    if isinstance(structure, L2KdeStructure):
        return {
            "kernel": "l2", "epsilon": structure.inner.total_budget.epsilon, "alpha": structure.embedding.alpha,
            "R": structure.R, "embedding_seed": structure.embedding.seed, "range_mode": structure.range_mode,
            "noisy": structure.inner.trees[0].noisy,
        }
    if not isinstance(structure, HighDimTree):
        raise ValueError(f"--fresh-noise needs a structure written by build, got kind {structure.kind!r}")
    first = structure.trees[0]
    params: Dict[str, Any] = {"epsilon": structure.total_budget.epsilon, "R": structure.R, "noisy": first.noisy}
    if isinstance(first, NoisyLpTree):
        params.update(kernel="lpp", p=first.p)
    elif isinstance(first, CountingTree):
        params.update(kernel="baseline", alpha=first.alpha)
    else:
        params.update(kernel="l1")
    return params


def answer(structure, point: List[float]) -> float:
    if isinstance(structure, (NoisyL1Tree, NoisyLpTree, CountingTree)):
        if len(point) != 1:
            raise ValueError(f"one-dimensional structure, got a {len(point)}-coordinate point")
        return structure.query(point[0])
    return structure.query(point)


def summary_line(structure, dataset: Dataset) -> str:
    inner = structure.inner if isinstance(structure, L2KdeStructure) else structure
    parts = [
        f"kind={structure.kind}",
        f"n={dataset.n}",
        f"d={dataset.d}",
        f"L={inner.L}",
        f"nodes={structure.node_count}",
        f"epsilon={inner.total_budget.epsilon!r}",
        f"noisy={str(inner.trees[0].noisy).lower()}",
    ]
    first = inner.trees[0]
    if isinstance(first, NoisyLpTree):
        parts.append(f"p={first.p}")
    if isinstance(first, CountingTree):
        parts.append(f"alpha={first.alpha!r}")
    if isinstance(structure, L2KdeStructure):
        parts += [f"k={structure.embedding.k}", f"R_prime={structure.R_prime!r}"]
    return " ".join(parts)


def cmd_build(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = load_settings(args)
    if args.kernel == "lpp" and args.p > 16:
        parser.error(f"--p must be at most 16, got {args.p}")
    if args.kernel == "l2" and not args.alpha < 1:
        parser.error(f"--alpha must lie in (0, 1) for the l2 kernel, got {args.alpha}")
    dataset = load_source(args, config)
    params: Dict[str, Any] = {
        "epsilon": args.epsilon, "p": args.p, "alpha": args.alpha, "range_mode": args.range_mode,
        # the ball of radius R * sqrt(d) holds the box [0, R)^d
        "R": dataset.R * dataset.d ** 0.5,
    }
    structure = build_structure(args.kernel, dataset, params, not args.no_noise, NoiseStream(args.seed))
    save_structure(structure, args.out)
    print(summary_line(structure, dataset))
    return 0


def cmd_query(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = load_settings(args)
    point = parse_point(args.point)
    structure = load_structure(args.structure)
    if not args.fresh_noise:
        print(repr(answer(structure, point)))
        return 0

    if not (args.data or args.gen):
        parser.error("--fresh-noise needs --data or --gen")
    logger.warning(FRESH_NOISE_WARNING)
    params = structure_params(structure)
    dataset = load_source(args, config, R=None if params["kernel"] == "l2" else structure.R)
    root = NoiseStream(args.seed)
    for trial in range(args.trials):
        rebuilt = build_structure(params["kernel"], dataset, params, params["noisy"], root.child(STREAM_TRIAL, 0, trial))
        print(repr(answer(rebuilt, point)))
    return 0


def cmd_bench(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = load_settings(args)
    plan_arg = args.plan or config.bench.default_plan
    plan_path = Path(plan_arg)
    if plan_path.suffix in (".yaml", ".yml") and plan_path.is_file():
        plans = [plan for entries in load_plans(plan_path).values() for plan in entries]
    else:
        try:
            plans = args.manager.get_plan(plan_arg)
        except KeyError as e:
            parser.error(e.args[0])
    if args.trials is not None:
        plans = [plan.model_copy(update={"trials": args.trials}) for plan in plans]

    rows = run_plans(
        plans,
        seed=args.seed,
        node_cap=config.bench.node_cap,
        warmup_rounds=config.bench.warmup_rounds,
        workers=args.workers or config.bench.workers,
        timing=True if args.timing else None,
        data_dir=config.data.data_dir,
    )
    table = comparison_table(rows)
    if not table.empty:
        logger.info("mean |A - A'| by arm:\n%s", table.to_string())
    if args.out:
        write_results(rows, args.out)
        logger.info("wrote %d rows to %s", len(rows), args.out)
    else:
        sys.stdout.write(results_csv(rows))
    return 0


COMMANDS = {"build": cmd_build, "query": cmd_query, "bench": cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and run one command; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, parser)
    except (ValueError, OSError) as e:
        logger.error("%s", e)
        return 1
    except KeyboardInterrupt:
        logger.error("interrupted")
        return 1


if __name__ == "__main__":
    sys.exit(main())
