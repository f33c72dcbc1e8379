"""
CSV tables for the Calibration Toolkit
Reads designs with tolerant header mapping and writes full-precision CSV
"""

import logging
import re

import numpy as np
import pandas as pd

from calibkit.core.design import Design
from calibkit.errors import DataError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

RESPONSE_NAMES = ["y", "response", "value", "output", "yp", "ys"]

_X_PATTERN = re.compile(r"^x(\d*)$")
_THETA_PATTERN = re.compile(r"^theta(\d*)$")


def _numeric(text):
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def read_table(path):
    """Read a numeric CSV; a first row of numbers is treated as data (no header)"""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse CSV {path}: {exc}") from exc
    if all(_numeric(column) for column in frame.columns):
        frame = pd.read_csv(path, header=None, float_precision="round_trip")
        frame.columns = [f"col{i}" for i in range(frame.shape[1])]
        frame.attrs["headerless"] = True
    else:
        frame.attrs["headerless"] = False
    logger.debug("read %s: columns %s", path, ", ".join(map(str, frame.columns)))
    return frame


def _ordered(matches):
    # "x" sorts before "x1", then numerically
    return [column for _, column in sorted(matches, key=lambda item: (item[0] != "", int(item[0] or 0)))]


def map_columns(frame):
    """Find coordinate, parameter and response columns by (case-insensitive) name

    Returns:
        dict: {"x": [...], "theta": [...], "y": column or None}
    """
    mapping = {"x": [], "theta": [], "y": None}
    x_matches, theta_matches = [], []
    lowercase = {str(column).strip().lower(): column for column in frame.columns}
    for name, column in lowercase.items():
        x_match = _X_PATTERN.match(name)
        theta_match = _THETA_PATTERN.match(name)
        if x_match:
            x_matches.append((x_match.group(1), column))
        elif theta_match:
            theta_matches.append((theta_match.group(1), column))
    for name in RESPONSE_NAMES:
        if name in lowercase:
            mapping["y"] = lowercase[name]
            break
    mapping["x"] = _ordered(x_matches)
    mapping["theta"] = _ordered(theta_matches)
    return mapping


def split_table(frame, x_dim=None, theta_dim=0, require_response=True):
    """Split a table into (X, Theta, y) arrays

    Headerless tables are read positionally: x columns, then theta columns,
    then the response in the last column.
    """
    if frame.attrs.get("headerless"):
        values = frame.to_numpy(dtype=float)
        if x_dim is None:
            x_dim = values.shape[1] - theta_dim - (1 if require_response else 0)
        needed = x_dim + theta_dim + (1 if require_response else 0)
        if x_dim < 1 or values.shape[1] < needed:
            raise DataError(f"headerless table has {values.shape[1]} columns, need {needed}")
        X = values[:, :x_dim]
        theta = values[:, x_dim:x_dim + theta_dim]
        y = values[:, -1] if require_response else None
        return X, theta, y

    mapping = map_columns(frame)
    if not mapping["x"]:
        raise DataError(f"no coordinate column (x or x1..xd) among {list(frame.columns)}")
    if x_dim is not None and len(mapping["x"]) != x_dim:
        raise DataError(f"expected {x_dim} coordinate columns, found {mapping['x']}")
    if len(mapping["theta"]) != theta_dim:
        raise DataError(f"expected {theta_dim} parameter columns, found {mapping['theta']}")
    if require_response and mapping["y"] is None:
        raise DataError(f"no response column ({', '.join(RESPONSE_NAMES)}) among {list(frame.columns)}")
    try:
        X = frame[mapping["x"]].to_numpy(dtype=float)
        theta = frame[mapping["theta"]].to_numpy(dtype=float)
        y = frame[mapping["y"]].to_numpy(dtype=float) if mapping["y"] is not None else None
    except ValueError as exc:
        raise DataError(f"non-numeric entries in table: {exc}") from exc
    return X, theta, y


def read_design(path, domain, require_response=True):
    """Read a physical design CSV into (Design, responses or None)"""
    X, _, y = split_table(read_table(path), domain.dim, 0, require_response)
    return Design(X, domain), y


def read_runs(path, runs_domain, x_dim, theta_dim):
    """Read simulator runs (x..., theta..., y) into a Design over Omega x Theta and outputs"""
    X, theta, y = split_table(read_table(path), x_dim, theta_dim)
    return Design(np.hstack([X, theta]), runs_domain), y


def coordinate_columns(dim, prefix="x"):
    return [prefix] if dim == 1 else [f"{prefix}{i + 1}" for i in range(dim)]


def design_frame(design, values=None):
    frame = pd.DataFrame(design.points, columns=coordinate_columns(design.dim))
    if values is not None:
        frame["y"] = np.asarray(values, dtype=float)
    return frame


def write_table(frame, path):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %s (%d rows)", path, len(frame))


def write_design(design, path, values=None):
    """Write a design (and optional responses) as x..., y CSV readable by read_design"""
    write_table(design_frame(design, values), path)
