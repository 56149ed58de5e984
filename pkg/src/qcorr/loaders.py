"""Reading raw data arrays from CSV and JSON files."""

import json
import logging
from pathlib import Path

import jsonschema
import numpy as np

from .encoding import is_power_of_two
from .errors import InputError
from .schema import load_schema

logger = logging.getLogger(__name__)

ARRAY_SUFFIXES = (".csv", ".json", ".txt")


def _parse_json(path: Path) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"JSON parsing error in '{path}': {e}") from e

    try:
        jsonschema.validate(instance=document, schema=load_schema("array"))
    except jsonschema.ValidationError as e:
        raise InputError(f"'{path}' is not a numeric array: {e.message}") from e

    try:
        return np.asarray(document, dtype=np.float64)
    except ValueError as e:
        raise InputError(f"'{path}' has rows of unequal length") from e


def _parse_csv(path: Path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=1, dtype=np.float64)
    except ValueError as e:
        raise InputError(f"CSV parsing error in '{path}': {e}") from e


def load_array(path: str | Path, ndim: int | None = None) -> np.ndarray:
    """Load a raw array: one value per line (1D) or N rows of N values (2D).

    Values must be finite and the side length a power of 2; 2D arrays must be square.
    """
    path = Path(path)
    try:
        values = _parse_json(path) if path.suffix.lower() == ".json" else _parse_csv(path)
    except OSError as e:
        raise InputError(f"Could not read file '{path}': {e}") from e

    # a single CSV row of values is a 1D array, not a 1xN matrix
    if values.ndim == 2 and values.shape[0] == 1 and ndim != 2:
        values = values[0]
    if ndim is not None and values.ndim != ndim:
        raise InputError(f"'{path}' holds a {values.ndim}D array, expected {ndim}D")
    if values.ndim not in (1, 2):
        raise InputError(f"'{path}' must hold a 1D or 2D array, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise InputError(f"'{path}' contains NaN or Inf values")
    if values.ndim == 2 and values.shape[0] != values.shape[1]:
        raise InputError(f"'{path}' must be square, got shape {values.shape}")
    if values.shape[0] < 2 or not is_power_of_two(values.shape[0]):
        raise InputError(
            f"'{path}' has length {values.shape[0]}, which is not a power of 2 (at least 2)"
        )

    logger.debug("Loaded %s array from %s", values.shape, path)
    return values


def load_array_dir(directory: str | Path) -> list[tuple[Path, np.ndarray]]:
    """Load every array file in ``directory`` in name order; all must be N x N and equal."""
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in ARRAY_SUFFIXES)
    if not files:
        raise InputError(f"No .csv or .json arrays found in '{directory}'")

    arrays = [(p, load_array(p, ndim=2)) for p in files]
    first_path, first = arrays[0]
    for p, values in arrays[1:]:
        if values.shape != first.shape:
            raise InputError(
                f"'{p}' has shape {values.shape}, but '{first_path}' has {first.shape}"
            )
    return arrays
