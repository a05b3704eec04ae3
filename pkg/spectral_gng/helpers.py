# spectral_gng/helpers.py
# File helpers: point/label CSV readers and writers, JSON output, debug dumps

import csv
import json
import logging
import os
import traceback
from pathlib import Path
from typing import Any, Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel

from spectral_gng.errors import InputError, ParseError
from spectral_gng.image_pipeline import read_label_png

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_points_csv(path: PathLike, labeled: Optional[bool] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Read comma-separated points, one per row.

    A first row that is not numeric is a header. The last column holds integer labels
    when labeled=True, or when labeled is None and the header's last field is "label".
    """
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = [(number, row) for number, row in enumerate(csv.reader(f), start=1)
                    if row and any(cell.strip() for cell in row)]
    except OSError as e:
        raise InputError(f"Cannot read points file {path}: {e}") from e
    except (UnicodeDecodeError, csv.Error) as e:
        raise ParseError(f"Not a text CSV file: {e}", path=str(path)) from e

    if rows and not all(_is_number(cell) for cell in rows[0][1]):
        header = [cell.strip().lower() for cell in rows[0][1]]
        if labeled is None:
            labeled = header[-1] == "label"
        rows = rows[1:]
    labeled = bool(labeled)
    if not rows:
        raise ParseError("No data rows", path=str(path))

    width = len(rows[0][1])
    if labeled and width < 2:
        raise ParseError("A labeled file needs at least one coordinate column", line=rows[0][0], path=str(path))

    values = np.empty((len(rows), width))
    for r, (number, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"Expected {width} fields, found {len(row)}", line=number, path=str(path))
        try:
            values[r] = [float(cell) for cell in row]
        except ValueError as e:
            raise ParseError(f"Non-numeric field ({e})", line=number, path=str(path)) from e
        if not np.all(np.isfinite(values[r])):
            raise ParseError("Non-finite value", line=number, path=str(path))

    if not labeled:
        logger.info(f"[CLI] Read {values.shape[0]} points of dimension {width} from {path}")
        return values, None

    labels = values[:, -1]
    bad = np.flatnonzero(labels != np.round(labels))
    if bad.size:
        raise ParseError("Label column must hold integers", line=rows[int(bad[0])][0], path=str(path))
    logger.info(f"[CLI] Read {values.shape[0]} labeled points of dimension {width - 1} from {path}")
    return values[:, :-1], labels.astype(np.int64)


def write_points_csv(path: PathLike, points: np.ndarray, labels: Optional[np.ndarray] = None) -> None:
    points = np.asarray(points, dtype=float)
    names = ["x", "y"] if points.shape[1] == 2 else [f"x{j}" for j in range(points.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(names + (["label"] if labels is not None else []))
        for i, row in enumerate(points):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(int(labels[i]))
            writer.writerow(cells)


def write_labels_csv(path: PathLike, labels) -> None:
    """One label per line for 1-D labels, one image row per line for label maps"""
    labels = np.asarray(getattr(labels, "labels", labels))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        if labels.ndim == 1:
            writer.writerow(["label"])
            writer.writerows([[int(v)] for v in labels])
        else:
            writer.writerows([[int(v) for v in row] for row in labels])


def read_label_file(path: PathLike) -> np.ndarray:
    """Integer label map from a PNG/PPM (palette, grayscale or RGB) or a CSV of integer rows"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Label file not found: {path}")
    if path.suffix.lower() not in (".csv", ".txt"):
        return read_label_png(path)

    rows: List[List[int]] = []
    with open(path, newline="", encoding="utf-8") as f:
        for number, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if number == 1 and not all(_is_number(cell) for cell in row):
                continue
            try:
                rows.append([int(float(cell)) for cell in row])
            except ValueError as e:
                raise ParseError(f"Non-integer label ({e})", line=number, path=str(path)) from e
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"Expected {len(rows[0])} labels, found {len(rows[-1])}", line=number,
                                 path=str(path))
    if not rows:
        raise ParseError("No label rows", path=str(path))
    return np.asarray(rows, dtype=np.int64)


def write_rows_csv(path: PathLike, rows: List[dict]) -> None:
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def to_json_text(content: Any) -> str:
    if isinstance(content, BaseModel):
        return content.model_dump_json(indent=2, exclude_none=True)
    return json.dumps(content, ensure_ascii=False, indent=2)


def write_json(path: PathLike, content: Any) -> None:
    Path(path).write_text(to_json_text(content) + "\n", encoding="utf-8")


def save_debug_file(content: Any, filename: str, debug_dir: PathLike, prefix: str = "debug") -> Optional[Path]:
    """Save content under debug_dir as <prefix>__<filename>; failures are logged, never raised."""
    try:
        os.makedirs(debug_dir, exist_ok=True)
        safe_filename = "".join(c for c in filename if c.isalnum() or c in "._-")
        filepath = Path(debug_dir) / f"{prefix}__{safe_filename}"

        if isinstance(content, (dict, list, BaseModel)):
            content_str = to_json_text(content)
        else:
            content_str = str(content)
        filepath.write_text(content_str, encoding="utf-8")

        logger.info(f"[debug] Saved {prefix} to {filepath} ({filepath.stat().st_size} bytes)")
        return filepath
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"[debug] Failed to save debug file {filename}")
        logger.error(f"[debug] Error: {str(e)}")
        logger.debug(f"[debug] Traceback: {traceback.format_exc()}")
        return None


def dump_path(debug_dir: PathLike, prefix: str, filename: str) -> Path:
    os.makedirs(debug_dir, exist_ok=True)
    return Path(debug_dir) / f"{prefix}__{filename}"


def pairs_from_csv(path: PathLike) -> Iterable[Tuple[Path, Path]]:
    """(prediction, ground truth) path pairs, relative paths resolved against the list's directory"""
    base = Path(path).parent
    try:
        with open(path, newline="", encoding="utf-8") as f:
            for number, row in enumerate(csv.reader(f), start=1):
                if not row or (number == 1 and [c.strip().lower() for c in row[:2]] == ["pred", "gt"]):
                    continue
                if len(row) < 2:
                    raise ParseError("Expected pred,gt", line=number, path=str(path))
                yield base / row[0].strip(), base / row[1].strip()
    except OSError as e:
        raise InputError(f"Cannot read pairs file {path}: {e}") from e
