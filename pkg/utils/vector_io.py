"""
Plain-text vector exchange.

A vector file holds one decimal per line; the line count is the vector
length. Values are written with repr() so reading them back is exact.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from core.error_handling import DimensionError
from core.grid import as_grid_function

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """Shortest round-trip representation of a float."""
    return repr(float(value))


def read_vector(path: PathLike, expected_length: Optional[int] = None) -> np.ndarray:
    """
    Read a vector file.

    Args:
        path: File with one decimal per line
        expected_length: Required length, if known

    Returns:
        np.ndarray: The vector

    Raises:
        DimensionError: On unparsable lines, non-finite values or a length mismatch
        OSError: If the file cannot be read
    """
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as e:
                raise DimensionError(f"{path}:{line_number}: not a decimal number: '{text}'") from e

    vector = as_grid_function(values)
    if expected_length is not None and vector.size != expected_length:
        raise DimensionError(f"{path}: expected {expected_length} values, found {vector.size}")
    logger.debug(f"Read vector of length {vector.size} from {path}")
    return vector


def write_vector(path: PathLike, vector: np.ndarray) -> None:
    """Write a vector, one value per line with LF endings."""
    lines = "".join(f"{format_float(x)}\n" for x in np.asarray(vector, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(lines)
