"""
Sample ingestion

CSV files hold one point per row; a header whose last column is named
`weight` marks that column as sample weights. JSON files hold either an
array of points or {"points": [...], "weights": [...]}.

Usage:
    s = load_samples("p.csv")
"""

import csv
import json
from pathlib import Path

import numpy as np

from kfbd.core.embedding import SampleSet
from kfbd.utils.exceptions import InputError
from kfbd.utils.logger import get_logger

logger = get_logger(__name__)


def load_samples(path: str | Path) -> SampleSet:
    """
    Read a weighted sample set from CSV or JSON

    Args:
        path: File path (.csv or .json)

    Returns:
        SampleSet (uniform weights unless the file supplies them)

    Raises:
        InputError: missing/unreadable file, ragged rows, bad weights
    """
    file = Path(path)
    if not file.is_file():
        raise InputError(f"Sample file not found: {file}")
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"Cannot read sample file {file}: {e}") from e

    if file.suffix.lower() == ".json":
        points, weights = _parse_json(text, file)
    else:
        points, weights = _parse_csv(text, file)

    sample = SampleSet.uniform(points) if weights is None else SampleSet(points, weights)
    logger.debug(f"Loaded {sample.size} points in R^{sample.dim} from {file}")
    return sample


def _parse_json(text: str, file: Path):
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{file} is not valid JSON: {e}") from e
    weights = None
    if isinstance(payload, dict):
        unknown = set(payload) - {"points", "weights"}
        if unknown or "points" not in payload:
            raise InputError(f"{file} must hold 'points' and optionally 'weights', got keys {sorted(payload)}")
        weights = payload.get("weights")
        payload = payload["points"]
    return _as_matrix(payload, file), None if weights is None else np.asarray(weights, dtype=float)


def _parse_csv(text: str, file: Path):
    rows = [row for row in csv.reader(text.splitlines()) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise InputError(f"{file} contains no samples")

    weighted = False
    if not _is_numeric(rows[0]):
        header = [cell.strip().lower() for cell in rows[0]]
        weighted = header[-1] == "weight"
        rows = rows[1:]
    matrix = _as_matrix([[_to_float(cell, file) for cell in row] for row in rows], file)
    if not weighted:
        return matrix, None
    if matrix.shape[1] < 2:
        raise InputError(f"{file} has a weight column but no coordinates")
    return matrix[:, :-1], matrix[:, -1]


def _as_matrix(rows, file: Path) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{file} contains no samples")
    lengths = {len(row) if isinstance(row, list) else 1 for row in rows}
    if len(lengths) != 1:
        raise InputError(f"{file} mixes points of dimensions {sorted(lengths)}")
    try:
        matrix = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"{file} contains non-numeric coordinates") from e
    return matrix.reshape(len(rows), -1)


def _is_numeric(row) -> bool:
    try:
        [float(cell) for cell in row]
        return True
    except ValueError:
        return False


def _to_float(cell: str, file: Path) -> float:
    try:
        return float(cell)
    except ValueError as e:
        raise InputError(f"{file} contains a non-numeric cell {cell!r}") from e
