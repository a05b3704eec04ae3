#!/usr/bin/env python3
"""Smoke test: the three-rings set should come out as three clusters with high accuracy."""

import argparse
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from spectral_gng.config import RunConfig
from spectral_gng.errors import SpectralGngError
from spectral_gng.eval_metrics import clustering_accuracy
from spectral_gng.pipeline import cluster_points
from spectral_gng.synthetic import gen_synthetic


def main() -> int:
    parser = argparse.ArgumentParser(description="Cluster the three-rings set over a few seeds.")
    parser.add_argument("--seeds", type=int, default=5, help="Number of consecutive seeds from 0.")
    parser.add_argument("--min-accuracy", type=float, default=0.95)
    args = parser.parse_args()

    points, labels = gen_synthetic("rings", seed=0)
    failures = 0
    for seed in range(args.seeds):
        try:
            result = cluster_points(points, RunConfig(seed=seed))
        except SpectralGngError as exc:
            print(f"[RINGS CHECK] seed {seed} FAILED: {exc}")
            failures += 1
            continue
        accuracy = clustering_accuracy(result.point_labels, labels)
        ok = result.outcome.chosen_k == 3 and accuracy >= args.min_accuracy
        failures += 0 if ok else 1
        print(f"[RINGS CHECK] seed {seed}: m={result.m} k={result.outcome.chosen_k} "
              f"accuracy={accuracy:.4f} {'OK' if ok else 'FAILED'}")

    if failures:
        print(f"[RINGS CHECK] {failures}/{args.seeds} seeds failed")
        return 1
    print("[RINGS CHECK] SUCCESS")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
