"""
Experiment harness.

For every grid point of a plan the harness materializes the dataset, draws one
query batch, computes the exact answers, then rebuilds the structure
``trials`` times with fresh noise and compares. Datasets and query batches are
derived from the plan seed and depend only on (n, d), so two arms run with the
same seed see identical instances. Results are rows of a versioned CSV.
"""

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .. import __version__
from ..data.dataset import Dataset, load_dataset
from ..embedding.l2kde import init_l2, target_dimension
from ..logger.logger import get_logger
from ..models import RESULT_COLUMNS, ExperimentPlan, ResultRow, TrialStats
from ..oracle.exact import exact_l1, exact_l2, exact_lpp
from ..privacy.noise import DEFAULT_SEED, STREAM_EMBEDDING, STREAM_QUERIES, STREAM_TRIAL, NoiseStream
from ..trees.baseline import baseline_builder, grid_size
from ..trees.l1tree import choose_layers
from ..trees.lptree import choose_lp_layers, init_lp_high_dim
from ..trees.multidim import init_high_dim

logger = get_logger("harness")

SCHEMA_VERSION = 1
DEFAULT_NODE_CAP = 1 << 24
MIN_WARMUP_ROUNDS = 3
FLAG_SKIPPED = "skipped:node-cap"


@dataclass(frozen=True)
class QueryTiming:
    """Wall-clock per query, warmup excluded, plus the exact accumulation count."""

    median_ns: int
    p90_ns: int
    p99_ns: int
    op_count: int
    samples: int


@dataclass(frozen=True)
class GridPoint:
    n: int
    d: int
    epsilon: float
    alpha: float
    p: int


def grid_point(plan: ExperimentPlan, value: float) -> GridPoint:
    """Plan parameters with the swept variable replaced by ``value``."""
    params = {
        "n": plan.dataset.n,
        "d": plan.dataset.d,
        "epsilon": plan.epsilon,
        "alpha": plan.alpha,
        "p": plan.p,
    }
    if plan.sweep in ("n", "d", "p"):
        if value != int(value) or value < (0 if plan.sweep == "n" else 1):
            raise ValueError(f"{plan.sweep} grid values must be integers, got {value}")
        params[plan.sweep] = int(value)
    else:
        params[plan.sweep] = float(value)
    return GridPoint(**params)


def fit_similarity_error(approx: Any, exact: Any) -> Tuple[float, float, bool]:
    """Least-squares fit of |A - A'| = (M - 1) A' + Z over all pairs.

    Returns:
        (M, Z, degenerate). Slope and intercept are floored at 0. With fewer
        than two distinct A' the fit is degenerate: M = 1 and Z is the mean error.
    """
    a = np.asarray(approx, dtype=np.float64).ravel()
    a_exact = np.broadcast_to(np.asarray(exact, dtype=np.float64), np.shape(approx)).ravel()
    err = np.abs(a - a_exact)
    if err.size == 0:
        return 1.0, 0.0, True
    if np.unique(a_exact).size < 2:
        return 1.0, float(err.mean()), True
    slope, intercept = np.polyfit(a_exact, err, 1)
    return 1.0 + max(float(slope), 0.0), max(float(intercept), 0.0), False


def time_queries(structure: Any, queries: Sequence[Any], warmup_rounds: int = MIN_WARMUP_ROUNDS, rounds: int = 5) -> QueryTiming:
    """Median and tail latency of ``structure.query_stats`` over the batch.

    Raises:
        ValueError: With fewer than 3 warmup rounds or an empty batch
    """
    if warmup_rounds < MIN_WARMUP_ROUNDS:
        raise ValueError(f"at least {MIN_WARMUP_ROUNDS} warmup rounds are required, got {warmup_rounds}")
    if not len(queries):
        raise ValueError("timing needs at least one query")
    for _ in range(warmup_rounds):
        for q in queries:
            structure.query_stats(q)

    samples: List[int] = []
    ops = 0
    for _ in range(rounds):
        for q in queries:
            start = time.perf_counter_ns()
            _, count = structure.query_stats(q)
            samples.append(time.perf_counter_ns() - start)
            ops = max(ops, count)
    arr = np.asarray(samples)
    return QueryTiming(
        median_ns=int(np.median(arr)),
        p90_ns=int(np.percentile(arr, 90)),
        p99_ns=int(np.percentile(arr, 99)),
        op_count=ops,
        samples=arr.size,
    )


def config_hash(plan: ExperimentPlan, value: float, seed: int) -> str:
    text = json.dumps({"plan": plan.model_dump(mode="json"), "value": value, "seed": seed}, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def estimated_nodes(arm: str, point: GridPoint, n: int, d: int) -> int:
    """Nodes the structure would allocate, before building it."""
    if arm == "faster-l1":
        return d * ((1 << choose_layers(max(n, 1))) - 1)
    if arm == "baseline-blm":
        return d * ((1 << choose_layers(grid_size(n) + 1)) - 1)
    if arm == "lp":
        return d * ((1 << choose_lp_layers(max(n, 1), point.p)) - 1)
    k = target_dimension(max(n, 1), point.alpha)
    return k * ((1 << choose_layers(max(n, 1))) - 1)


def draw_queries(dataset: Dataset, count: int, seed: int) -> np.ndarray:
    """Query batch, uniform on [0, R)^d, shared by every trial and arm."""
    rng = NoiseStream(seed).child(STREAM_QUERIES).rng
    q = rng.random((count, dataset.d)) * dataset.R
    np.minimum(q, np.nextafter(dataset.R, 0.0), out=q)
    return q


def make_builder(arm: str, dataset: Dataset, point: GridPoint, add_noise: bool, seed: int) -> Callable[[NoiseStream], Any]:
    pts = dataset.points
    if arm == "faster-l1":
        return lambda stream: init_high_dim(pts, dataset.R, point.epsilon, add_noise, stream)
    if arm == "baseline-blm":
        builder = baseline_builder(point.alpha)
        return lambda stream: init_high_dim(pts, dataset.R, point.epsilon, add_noise, stream, builder=builder)
    if arm == "lp":
        return lambda stream: init_lp_high_dim(pts, dataset.R, point.epsilon, point.p, add_noise, stream)
    # the l2 bound of the box [0, R)^d; the embedding stays fixed across trials
    radius = dataset.R * math.sqrt(dataset.d)
    emb_seed = int(NoiseStream(seed).child(STREAM_EMBEDDING).rng.integers(0, (1 << 63) - 1))
    return lambda stream: init_l2(pts, radius, point.epsilon, point.alpha, add_noise, stream, embedding_seed=emb_seed)


def exact_answers(arm: str, dataset: Dataset, queries: np.ndarray, p: int) -> np.ndarray:
    if arm == "lp":
        return np.array([exact_lpp(dataset.points, q, p) for q in queries])
    if arm == "l2":
        return np.array([exact_l2(dataset.points, q) for q in queries])
    return np.array([exact_l1(dataset.points, q) for q in queries])


def run_trials(
    build: Callable[[NoiseStream], Any],
    queries: np.ndarray,
    root: NoiseStream,
    grid_index: int,
    trials: int,
    workers: int = 1,
) -> Tuple[np.ndarray, int]:
    """Answers of every trial (trials x queries) and the largest per-query operation count."""

    def one(trial: int) -> Tuple[np.ndarray, int]:
        structure = build(root.child(STREAM_TRIAL, grid_index, trial))
        if trial == 0:
            stats = [structure.query_stats(q) for q in queries]
            return np.array([s[0] for s in stats]), max(s[1] for s in stats)
        return np.array([structure.query(q) for q in queries]), 0

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    return np.vstack([r[0] for r in results]), results[0][1]


def aggregate(answers: np.ndarray, exact: np.ndarray) -> TrialStats:
    """Mean |A - A'|, its standard error across trials, and the (M, Z) fit."""
    err = np.abs(answers - exact[np.newaxis, :])
    per_trial = err.mean(axis=1)
    trials = per_trial.size
    stderr = float(per_trial.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    fit_M, fit_Z, degenerate = fit_similarity_error(answers, np.broadcast_to(exact, answers.shape))
    return TrialStats(
        mean_abs_error=float(err.mean()),
        stderr=stderr,
        fit_M=fit_M,
        fit_Z=fit_Z,
        degenerate_fit=degenerate,
    )


def run_plan(
    plan: ExperimentPlan,
    seed: Optional[int] = None,
    node_cap: int = DEFAULT_NODE_CAP,
    warmup_rounds: int = MIN_WARMUP_ROUNDS,
    workers: int = 1,
    timing: Optional[bool] = None,
    data_dir: Optional[str] = None,
) -> List[ResultRow]:
    """Run every grid point of ``plan`` and return one row per point.

    Args:
        plan: Arm, sweep and trial counts
        seed: Root seed; the plan's own seed wins, then this, then the default
        node_cap: Grid points needing more nodes are reported with a skip flag
        warmup_rounds: Untimed rounds before timing (at least 3)
        workers: Threads running the trials of one grid point
        timing: Overrides ``plan.timing``
        data_dir: Search directory for CSV datasets
    """
    seed = plan.seed if plan.seed is not None else (seed if seed is not None else DEFAULT_SEED)
    timing = plan.timing if timing is None else timing
    if plan.dataset.generator == "csv" and plan.sweep in ("n", "d"):
        raise ValueError(f"plan '{plan.name}' sweeps {plan.sweep} over a CSV dataset")
    root = NoiseStream(seed)
    rows: List[ResultRow] = []

    for grid_index, value in enumerate(plan.grid):
        point = grid_point(plan, value)
        descriptor = plan.dataset.model_copy(update={"n": point.n, "d": point.d})
        dataset = load_dataset(descriptor, seed=seed, data_dir=data_dir)
        row = ResultRow(
            arm=plan.arm, sweep_var=plan.sweep, sweep_value=float(value),
            n=dataset.n, d=dataset.d, R=dataset.R, epsilon=point.epsilon, alpha=point.alpha, p=point.p,
            trials=plan.trials, seed=seed, config_hash=config_hash(plan, value, seed), version=__version__,
        )

        nodes = estimated_nodes(plan.arm, point, dataset.n, dataset.d)
        if nodes > node_cap:
            logger.info("%s %s=%s skipped: %d nodes exceed the cap of %d", plan.arm, plan.sweep, value, nodes, node_cap)
            row.flag = FLAG_SKIPPED
            rows.append(row)
            continue

        queries = draw_queries(dataset, plan.queries, seed)
        exact = exact_answers(plan.arm, dataset, queries, point.p)
        build = make_builder(plan.arm, dataset, point, plan.add_noise, seed)
        answers, ops = run_trials(build, queries, root, grid_index, plan.trials, workers)
        stats = aggregate(answers, exact)

        init_ms, median_ns = 0, 0
        if timing:
            start = time.perf_counter_ns()
            timed = build(root.child(STREAM_TRIAL, grid_index, plan.trials))
            init_ms = int(round((time.perf_counter_ns() - start) / 1e6))
            latency = time_queries(timed, queries, warmup_rounds)
            median_ns = latency.median_ns
            logger.info(
                "%s %s=%s query latency: median=%dns p90=%dns p99=%dns over %d samples, init=%dms",
                plan.arm, plan.sweep, value, latency.median_ns, latency.p90_ns, latency.p99_ns,
                latency.samples, init_ms,
            )

        row.apply_stats(
            TrialStats(
                mean_abs_error=stats.mean_abs_error, stderr=stats.stderr, fit_M=stats.fit_M, fit_Z=stats.fit_Z,
                median_query_ns=median_ns, init_ms=init_ms, op_count=ops, degenerate_fit=stats.degenerate_fit,
            )
        )
        logger.info(
            "%s %s=%s: mean|A-A'|=%.6g stderr=%.3g ops=%d",
            plan.arm, plan.sweep, value, row.mean_abs_err, row.stderr, row.op_count,
        )
        rows.append(row)
    return rows


def run_plans(plans: Iterable[ExperimentPlan], **kwargs) -> List[ResultRow]:
    rows: List[ResultRow] = []
    for plan in plans:
        logger.info("running plan '%s' arm=%s sweep=%s (%d points)", plan.name, plan.arm, plan.sweep, len(plan.grid))
        rows.extend(run_plan(plan, **kwargs))
    return rows


def results_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows], columns=RESULT_COLUMNS)


def results_csv(rows: Sequence[ResultRow]) -> str:
    """CSV text: one '#' schema line, the header, then one line per row."""
    header = f"# dp-kde-results schema={SCHEMA_VERSION} version={__version__}\n"
    return header + results_frame(rows).to_csv(index=False, lineterminator="\n")


def write_results(rows: Sequence[ResultRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(results_csv(rows), encoding="utf-8")
    return path


def read_results(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", keep_default_na=False)


def comparison_table(rows: Sequence[ResultRow]) -> pd.DataFrame:
    """Mean |A - A'| per sweep value and arm, side by side."""
    frame = results_frame([r for r in rows if not r.flag.startswith("skipped")])
    if frame.empty:
        return frame
    return frame.pivot_table(index=["sweep_var", "sweep_value"], columns="arm", values="mean_abs_err", aggfunc="first")
