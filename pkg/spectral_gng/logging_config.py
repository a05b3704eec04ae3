"""
Logging configuration for clustering and segmentation runs
Console output plus, when a log directory is given, a full debug log and a
readable summary log per run
"""
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Optional, Tuple

DETAILED_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
SIMPLE_FORMAT = '%(asctime)s - %(message)s'

_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


def level_from_verbosity(verbosity: int, default: str = "WARNING") -> int:
    """-v → INFO, -vv → DEBUG, otherwise the configured default"""
    if verbosity >= 2:
        return logging.DEBUG
    if verbosity == 1:
        return logging.INFO
    return _LEVELS.get(default.upper(), logging.WARNING)


def setup_logging(
    console_level: int = logging.WARNING,
    log_dir: Optional[Path] = None,
    run_id: Optional[str] = None,
) -> Tuple[Optional[str], Optional[str]]:
    """
    Configure the root logger for one CLI invocation

    Console handler goes to stderr so stdout stays clean for JSON output.
    With a log directory, two files are created:
    1. Full debug log with all details
    2. Readable summary log (INFO and above)
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)

    # Remove existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    detailed_formatter = logging.Formatter(DETAILED_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')
    simple_formatter = logging.Formatter(SIMPLE_FORMAT, datefmt='%H:%M:%S')

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(simple_formatter)
    root_logger.addHandler(console_handler)

    if log_dir is None:
        return None, None

    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    run_suffix = f"_{run_id}" if run_id else ""

    debug_log_file = log_dir / f"debug_{timestamp}{run_suffix}.log"
    summary_log_file = log_dir / f"summary_{timestamp}{run_suffix}.log"

    debug_handler = logging.FileHandler(debug_log_file, mode='w', encoding='utf-8')
    debug_handler.setLevel(logging.DEBUG)
    debug_handler.setFormatter(detailed_formatter)
    root_logger.addHandler(debug_handler)

    summary_handler = logging.FileHandler(summary_log_file, mode='w', encoding='utf-8')
    summary_handler.setLevel(logging.INFO)
    summary_handler.setFormatter(simple_formatter)
    root_logger.addHandler(summary_handler)

    return str(debug_log_file), str(summary_log_file)


def log_section_header(logger, title: str):
    """Log a formatted section header"""
    separator = "=" * 80
    logger.info("")
    logger.info(separator)
    logger.info(f"  {title}")
    logger.info(separator)


def log_subsection(logger, title: str):
    """Log a formatted subsection header"""
    logger.info("")
    logger.info(f"--- {title} ---")


def log_data(logger, label: str, data: Any, max_length: int = 500):
    """Log data with label in readable format"""
    if isinstance(data, (dict, list)):
        try:
            formatted = json.dumps(data, indent=2, ensure_ascii=False, default=str)
        except (TypeError, ValueError):
            formatted = str(data)
        if len(formatted) > max_length:
            formatted = formatted[:max_length] + "... (truncated)"
        logger.info(f"{label}:\n{formatted}")
    elif isinstance(data, str) and len(data) > max_length:
        logger.info(f"{label}: {data[:max_length]}... (truncated)")
    else:
        logger.info(f"{label}: {data}")
