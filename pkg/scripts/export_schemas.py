#!/usr/bin/env python3
"""Write the JSON Schema of every report the CLI produces into schemas/."""

import argparse
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from spectral_gng.reports import export_schemas


def main() -> int:
    parser = argparse.ArgumentParser(description="Export report JSON schemas.")
    parser.add_argument(
        "--output",
        default=str(ROOT_DIR / "schemas"),
        help="Directory to write <name>.schema.json files into.",
    )
    args = parser.parse_args()

    try:
        written = export_schemas(Path(args.output))
    except OSError as exc:
        print(f"[SCHEMAS] FAILED: {exc}")
        return 1

    for path in written:
        print(f"[SCHEMAS] {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
