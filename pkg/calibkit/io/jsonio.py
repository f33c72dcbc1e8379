"""
JSON helpers for the Calibration Toolkit
Deterministic JSON output and tolerant JSON input
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path

import numpy as np

from calibkit.core.design import BoxDomain, Design
from calibkit.errors import DataError

logger = logging.getLogger(__name__)


def to_jsonable(obj):
    """Convert numpy values, enums and containers to plain JSON types

    Non-finite floats become None so the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(data):
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(data, path):
    Path(path).write_text(dumps(data), encoding="utf-8")
    logger.info("wrote %s", path)


def load_json(path):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in {path}: {exc}") from exc


def read_design_json(path):
    """Read {"domain": {...}, "points": [[...]], "values": [...]?} into (Design, values or None)"""
    data = load_json(path)
    if not isinstance(data, dict) or "points" not in data or "domain" not in data:
        raise DataError(f"{path} needs 'domain' and 'points'")
    design = Design(np.asarray(data["points"], dtype=float), BoxDomain.from_dict(data["domain"]))
    values = data.get("values")
    return design, None if values is None else np.asarray(values, dtype=float)
