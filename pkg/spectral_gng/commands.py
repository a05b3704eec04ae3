# spectral_gng/commands.py
# Subcommand implementations: gen, cluster, segment, eval, sweep

import argparse
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from spectral_gng.config import RunConfig
from spectral_gng.errors import DimensionMismatchError, InputError, SpectralGngError, StageError
from spectral_gng.eval_metrics import ALL_METRICS, clustering_accuracy, evaluate, mean_metrics
from spectral_gng.eigen_select import histogram_data, score_table_rows
from spectral_gng.embed_cluster import curve_rows
from spectral_gng.gng import dump_model_csv, nearest_neurons
from spectral_gng.helpers import (
    dump_path, pairs_from_csv, read_label_file, read_points_csv, save_debug_file, write_json,
    write_labels_csv, write_points_csv, write_rows_csv,
)
from spectral_gng.image_pipeline import run_segmentation, save_label_png
from spectral_gng.logging_config import log_data, log_section_header, log_subsection
from spectral_gng.pipeline import ClusterOutcome, PointClustering, cluster_neurons, cluster_points
from spectral_gng.reports import (
    EvalReport, EvalRow, GenReport, SweepReport, SweepRun, cluster_report, segment_report,
)
from spectral_gng.spectral_graph import dump_matrix_csv
from spectral_gng.synthetic import SyntheticParams, gen_synthetic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_DIMENSION = 3

STRATEGIES = ("xstar", "x", "eigengap")

# RunConfig field -> argparse dest for flags that map one to one
_CONFIG_FLAGS = (
    "seed", "m", "m_candidates", "elbow_restarts", "K", "variance_threshold", "k_min", "k_max", "k",
    "embedding", "pca_mode", "kmeans_restarts", "kmeans_max_iter", "feature_mode", "max_training_pixels",
    "output_dir", "dump_dir",
)
_GNG_FLAGS = ("eps_b", "eps_n", "insert_interval", "max_age", "alpha", "beta", "stability_tol", "max_epochs")


def exit_code_for(error: BaseException) -> int:
    root = error.root if isinstance(error, StageError) else error
    if isinstance(root, DimensionMismatchError):
        return EXIT_DIMENSION
    if isinstance(root, (InputError, OSError, ValueError)):
        return EXIT_INPUT
    return EXIT_INTERNAL


def build_config(args: argparse.Namespace) -> RunConfig:
    """Saved config (--config) overridden by every flag given on the command line"""
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    data = base.model_dump()
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if getattr(args, "max_training_pixels", None) == 0:
        data["max_training_pixels"] = None
    if getattr(args, "no_dequantize", False):
        data["dequantize"] = False
    if getattr(args, "no_median_filter", False):
        data["median_filter"] = False
    gng = dict(data["gng"])
    for name in _GNG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            gng[name] = value
    data["gng"] = gng
    return RunConfig.model_validate(data)


def _output_dir(config: RunConfig) -> Path:
    directory = Path(config.output_dir) if config.output_dir else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _map_jobs(worker: Callable, items: Sequence[Any], jobs: int) -> List[Any]:
    """worker over items, in input order; a process pool when jobs > 1"""
    if jobs <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(worker, items))


def dump_spectral(outcome: ClusterOutcome, model, dump_dir: Path, prefix: str) -> None:
    """Model, A, L_sym, score table, histogram and R_k curve files for offline plots"""
    if model is not None:
        dump_model_csv(model, dump_path(dump_dir, prefix, "neurons.csv"), dump_path(dump_dir, prefix, "edges.csv"))
    if outcome.affinity is not None:
        dump_matrix_csv(outcome.affinity, dump_path(dump_dir, prefix, "affinity.csv"))
        dump_matrix_csv(outcome.laplacian, dump_path(dump_dir, prefix, "laplacian.csv"))
    if outcome.selection is not None:
        write_rows_csv(dump_path(dump_dir, prefix, "scores.csv"), score_table_rows(outcome.selection))
        save_debug_file(histogram_data(outcome.selection), "histogram.json", dump_dir, prefix=prefix)
    if outcome.curve is not None:
        write_rows_csv(dump_path(dump_dir, prefix, "r_k_curve.csv"), curve_rows(outcome.curve))
    logger.info(f"[CLI] Dumps written to {dump_dir}")


# ---- gen ----

def cmd_gen(args: argparse.Namespace) -> int:
    overrides = {name: getattr(args, name) for name in ("radii", "width", "count", "sigma", "noise_count")
                 if getattr(args, name, None) is not None}
    params = SyntheticParams(**overrides)
    points, labels = gen_synthetic(args.kind, params, seed=args.seed)

    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_points_csv(output, points, labels)
    report = GenReport(kind=args.kind, seed=args.seed, n_points=int(points.shape[0]),
                       n_labels=int(np.unique(labels).size), output=str(output),
                       params=params.model_dump(mode="json"))
    write_json(output.with_suffix(".json"), report)
    print(f"{output}: {points.shape[0]} points, {report.n_labels} labels")
    return EXIT_OK


# ---- cluster ----

def cmd_cluster(args: argparse.Namespace) -> int:
    config = build_config(args)
    log_section_header(logger, f"Clustering {args.points}")
    log_data(logger, "Config", config.model_dump(mode="json"))

    points, labels = read_points_csv(args.points, labeled=True if args.labeled else None)
    result = cluster_points(points, config)
    accuracy = clustering_accuracy(result.point_labels, labels) if labels is not None else None

    out = _output_dir(config)
    stem = Path(args.points).stem
    write_labels_csv(out / f"{stem}_neuron_labels.csv", result.neuron_labels)
    write_labels_csv(out / f"{stem}_labels.csv", result.point_labels)
    report = cluster_report(result, config, n_points=int(points.shape[0]), dim=int(points.shape[1]),
                            source=str(args.points), accuracy=accuracy, include_timings=args.timings)
    report_path = out / f"{stem}_report.json"
    write_json(report_path, report)
    if config.dump_dir:
        dump_spectral(result.outcome, result.model, Path(config.dump_dir), stem)

    summary = f"chosen_k={report.chosen_k} m={report.m} eigenvectors={report.chosen_eigenvector_labels}"
    if accuracy is not None:
        summary += f" accuracy={accuracy:.4f}"
    print(f"{report_path}: {summary}")
    return EXIT_OK


# ---- segment ----

def _segment_one(job: Tuple[str, RunConfig, bool]) -> Tuple[str, int, str]:
    image, config, include_timings = job
    try:
        run = run_segmentation(image, config)
        out = _output_dir(config)
        stem = Path(image).stem
        save_label_png(run.label_image, out / f"{stem}_labels.png")
        write_labels_csv(out / f"{stem}_labels.csv", run.label_image)
        report = segment_report(run, config, source=str(image), include_timings=include_timings)
        report_path = out / f"{stem}_report.json"
        write_json(report_path, report)
        if config.dump_dir:
            dump_spectral(run.outcome, run.model, Path(config.dump_dir), stem)
        return image, EXIT_OK, f"{report_path}: chosen_k={report.chosen_k} segments={report.segments}"
    except (SpectralGngError, OSError, ValueError) as e:
        logger.error(f"[IMAGE] {image}: {e}")
        return image, exit_code_for(e), str(e)


def cmd_segment(args: argparse.Namespace) -> int:
    config = build_config(args)
    jobs = args.jobs or args.max_workers
    items = [(str(image), config, args.timings) for image in args.images]
    code = EXIT_OK
    for image, status, message in _map_jobs(_segment_one, items, jobs):
        print(message if status == EXIT_OK else f"{image}: error: {message}")
        code = max(code, status)
    return code


# ---- eval ----

def cmd_eval(args: argparse.Namespace) -> int:
    metrics = [m.strip() for m in args.metrics.split(",")] if args.metrics else list(ALL_METRICS)
    unknown = [m for m in metrics if m not in ALL_METRICS]
    if unknown:
        raise InputError(f"Unknown metric(s) {unknown}; choose from {', '.join(ALL_METRICS)}")

    if args.pairs:
        pairs = [(str(pred), [str(gt)]) for pred, gt in pairs_from_csv(args.pairs)]
    elif args.pred and args.gt:
        pairs = [(args.pred, list(args.gt))]
    else:
        raise InputError("eval needs --pred and --gt, or --pairs")

    rows = []
    for pred_path, gt_paths in pairs:
        pred = read_label_file(pred_path)
        truths = [read_label_file(path) for path in gt_paths]
        values = evaluate(pred, truths, metrics, foreground_label=args.foreground)
        rows.append(EvalRow(pred=pred_path, gt=",".join(gt_paths), metrics=values))
        logger.info(f"[EVAL] {pred_path}: {values}")

    report = EvalReport(metrics=metrics, rows=rows, mean=mean_metrics([row.metrics for row in rows]))
    if args.output:
        write_json(args.output, report)
    if args.csv:
        write_rows_csv(args.csv, [{"pred": r.pred, "gt": r.gt, **r.metrics} for r in rows])
    print(report.model_dump_json(indent=2))
    return EXIT_OK


# ---- sweep ----

def _strategy_labels(result: PointClustering, points: np.ndarray, config: RunConfig,
                     strategy: str) -> Tuple[np.ndarray, int]:
    if strategy == config.embedding or result.model is None:
        return result.point_labels, result.outcome.chosen_k
    outcome = cluster_neurons(result.model, config.model_copy(update={"embedding": strategy}))
    bmu, _ = nearest_neurons(result.model.positions, points)
    return outcome.labels[bmu], outcome.chosen_k


def _sweep_one(job: Tuple[np.ndarray, Optional[np.ndarray], RunConfig, bool]) -> SweepRun:
    points, labels, config, compare = job
    result = cluster_points(points, config)
    selection = result.outcome.selection
    run = SweepRun(seed=config.seed, m=result.m, chosen_k=result.outcome.chosen_k,
                   chosen_eigenvectors=len(selection.chosen) if selection is not None else 0)
    if labels is None:
        return run
    run.accuracy = clustering_accuracy(result.point_labels, labels)
    if compare:
        run.strategy_accuracy, run.strategy_k = {}, {}
        for strategy in STRATEGIES:
            predicted, k = _strategy_labels(result, points, config, strategy)
            run.strategy_accuracy[strategy] = clustering_accuracy(predicted, labels)
            run.strategy_k[strategy] = int(k)
    return run


def _histogram(values: List[int]) -> Dict[str, int]:
    counts = Counter(values)
    return {str(key): counts[key] for key in sorted(counts)}


def cmd_sweep(args: argparse.Namespace) -> int:
    """Cluster the same points with seeds seed, seed+1, ... and aggregate the outcomes"""
    base = build_config(args)
    if args.points:
        points, labels = read_points_csv(args.points, labeled=True if args.labeled else None)
    else:
        points, labels = gen_synthetic("rings", seed=args.seed)
    if args.runs < 1:
        raise InputError("--runs must be at least 1")

    jobs = [(points, labels, base.model_copy(update={"seed": args.seed + i}), args.compare)
            for i in range(args.runs)]
    log_section_header(logger, f"Sweep of {args.runs} runs from seed {args.seed}")
    runs = _map_jobs(_sweep_one, jobs, args.jobs or args.max_workers)
    for run in runs:
        log_subsection(logger, f"seed {run.seed}")
        log_data(logger, "Run", run.model_dump(exclude_none=True))

    true_k = int(np.unique(labels).size) if labels is not None else None
    accuracies = [r.accuracy for r in runs if r.accuracy is not None]
    at_true_k = [r.accuracy for r in runs if r.accuracy is not None and r.chosen_k == true_k]
    strategy_means = None
    if args.compare and labels is not None:
        strategy_means = {s: float(np.mean([r.strategy_accuracy[s] for r in runs])) for s in STRATEGIES}

    report = SweepReport(
        base_seed=args.seed, runs=args.runs, input=str(args.points) if args.points else None,
        chosen_k_histogram=_histogram([r.chosen_k for r in runs]),
        chosen_eigenvector_histogram=_histogram([r.chosen_eigenvectors for r in runs]),
        mean_accuracy=float(np.mean(accuracies)) if accuracies else None,
        mean_accuracy_when_k_true=float(np.mean(at_true_k)) if at_true_k else None,
        true_k=true_k, strategy_mean_accuracy=strategy_means, per_run=runs,
    )
    out = _output_dir(base)
    report_path = out / (args.report or "sweep_report.json")
    write_json(report_path, report)
    print(f"{report_path}: chosen_k histogram {report.chosen_k_histogram}")
    return EXIT_OK
