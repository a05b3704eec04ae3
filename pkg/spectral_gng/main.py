#!/usr/bin/env python3
"""
spectral-gng command line
=========================
  gen      synthetic rings/blobs CSV with labels
  cluster  GNG + spectral clustering of a point CSV
  segment  image segmentation (one or more images)
  eval     segmentation metrics against one or more ground truths
  sweep    repeated clustering over consecutive seeds

Exit codes: 0 success, 1 internal or numeric failure, 2 input/parse/config error,
3 prediction and ground truth of different sizes.
"""

import argparse
import logging
import sys
from typing import List, Optional

from spectral_gng import __version__
from spectral_gng.commands import (
    EXIT_INTERNAL, cmd_cluster, cmd_eval, cmd_gen, cmd_segment, cmd_sweep, exit_code_for,
)
from spectral_gng.config import load_environment
from spectral_gng.errors import SpectralGngError, StageError
from spectral_gng.eval_metrics import ALL_METRICS
from spectral_gng.logging_config import level_from_verbosity, setup_logging

logger = logging.getLogger("spectral_gng")


def _m_value(text: str):
    return "auto" if text == "auto" else int(text)


def _int_list(text: str):
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str):
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run configuration (overrides --config)")
    group.add_argument("--config", help="JSON run configuration to start from")
    group.add_argument("--seed", type=int, help="master seed (default 0)")
    group.add_argument("--m", type=_m_value, help="GNG neuron count or 'auto' (elbow for points, 100 for images)")
    group.add_argument("--m-candidates", dest="m_candidates", type=_int_list,
                       help="elbow candidates, default 4,8,16,32,64,128,256")
    group.add_argument("--elbow-restarts", dest="elbow_restarts", type=int)
    group.add_argument("--K", dest="K", type=int, help="local-scale neighbor rank (default 1)")
    group.add_argument("--variance-threshold", dest="variance_threshold", type=float)
    group.add_argument("--k-min", dest="k_min", type=int)
    group.add_argument("--k-max", dest="k_max", type=int)
    group.add_argument("--k", dest="k", type=int, help="manual cluster count")
    group.add_argument("--embedding", choices=("xstar", "x", "eigengap"))
    group.add_argument("--pca-mode", dest="pca_mode", choices=("columns", "components"))
    group.add_argument("--kmeans-restarts", dest="kmeans_restarts", type=int)
    group.add_argument("--kmeans-max-iter", dest="kmeans_max_iter", type=int)
    group.add_argument("--output-dir", dest="output_dir")
    group.add_argument("--dump-dir", dest="dump_dir", help="write A, L_sym, scores, histogram and R_k curve here")
    group.add_argument("--timings", action="store_true", help="include timings and created_at in reports")

    gng = parser.add_argument_group("GNG parameters")
    gng.add_argument("--eps-b", dest="eps_b", type=float)
    gng.add_argument("--eps-n", dest="eps_n", type=float)
    gng.add_argument("--insert-interval", dest="insert_interval", type=int)
    gng.add_argument("--max-age", dest="max_age", type=int)
    gng.add_argument("--alpha", type=float)
    gng.add_argument("--beta", type=float)
    gng.add_argument("--stability-tol", dest="stability_tol", type=float)
    gng.add_argument("--max-epochs", dest="max_epochs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-gng",
        description="Approximate spectral clustering on a Growing Neural Gas",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    parser.add_argument("--log-dir", dest="log_dir", help="write debug and summary log files here")
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen", help="generate a labeled synthetic point set")
    gen.add_argument("kind", choices=("rings", "blobs", "rings_with_noise"))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", "-o", required=True, help="CSV path; a .json summary is written beside it")
    gen.add_argument("--radii", type=_float_list)
    gen.add_argument("--width", type=float)
    gen.add_argument("--count", type=int, help="points per ring or blob")
    gen.add_argument("--sigma", type=float)
    gen.add_argument("--noise-count", dest="noise_count", type=int)
    gen.set_defaults(handler=cmd_gen)

    cluster = subparsers.add_parser("cluster", help="cluster a CSV of points")
    cluster.add_argument("points", help="CSV of points, optional header, optional trailing label column")
    cluster.add_argument("--labeled", action="store_true", help="last column holds labels even without a header")
    _add_run_options(cluster)
    cluster.set_defaults(handler=cmd_cluster)

    segment = subparsers.add_parser("segment", help="segment one or more images")
    segment.add_argument("images", nargs="+")
    segment.add_argument("--features", dest="feature_mode", choices=("rgb", "rgbxy"))
    segment.add_argument("--max-training-pixels", dest="max_training_pixels", type=int,
                         help="subsample GNG training pixels above this count; 0 disables")
    segment.add_argument("--no-dequantize", dest="no_dequantize", action="store_true")
    segment.add_argument("--no-median-filter", dest="no_median_filter", action="store_true")
    segment.add_argument("--jobs", "-j", type=int, help="images processed in parallel")
    _add_run_options(segment)
    segment.set_defaults(handler=cmd_segment)

    evaluate = subparsers.add_parser("eval", help="evaluate a segmentation against ground truth")
    evaluate.add_argument("pred", nargs="?", help="predicted label image or CSV")
    evaluate.add_argument("--gt", nargs="+", help="one or more ground-truth label images or CSVs")
    evaluate.add_argument("--pairs", help="CSV of pred,gt path pairs")
    evaluate.add_argument("--metrics", help=f"comma list from {','.join(ALL_METRICS)} (default all)")
    evaluate.add_argument("--foreground", type=int, help="foreground label for f_measure (default: any non-zero)")
    evaluate.add_argument("--output", "-o", help="write the JSON report here")
    evaluate.add_argument("--csv", help="write one row of metrics per pair here")
    evaluate.set_defaults(handler=cmd_eval)

    sweep = subparsers.add_parser("sweep", help="cluster repeatedly over consecutive seeds")
    sweep.add_argument("points", nargs="?", help="labeled CSV; default is the three-rings set")
    sweep.add_argument("--labeled", action="store_true")
    sweep.add_argument("--runs", type=int, default=100)
    sweep.add_argument("--compare", action="store_true", help="also score the X and eigengap embeddings")
    sweep.add_argument("--report", help="report file name inside the output directory")
    sweep.add_argument("--jobs", "-j", type=int)
    _add_run_options(sweep)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.seed is None:
        parser.error("sweep requires --seed")

    settings = load_environment()
    debug_log, summary_log = setup_logging(
        level_from_verbosity(args.verbose, settings.log_level),
        log_dir=args.log_dir or settings.log_dir,
        run_id=f"{args.command}_seed{getattr(args, 'seed', None) or 0}",
    )
    if debug_log:
        logger.info(f"[CLI] Debug log: {debug_log}")
        logger.info(f"[CLI] Summary log: {summary_log}")
    logger.info(f"[CLI] Environment: {settings.environment}")

    if settings.is_production and getattr(args, "dump_dir", None):
        logger.warning("[CLI] Dumps are disabled in production")
        args.dump_dir = None
    args.max_workers = settings.max_workers

    try:
        return args.handler(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        logger.debug("[CLI] Stage failure", exc_info=True)
        return exit_code_for(e)
    except (SpectralGngError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        logger.debug("[CLI] Failure", exc_info=True)
        return exit_code_for(e)
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        logger.exception("[CLI] Unexpected failure")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
