"""Deterministic text forms for JSON and CSV outputs."""
import json
import math
from typing import Any

import numpy as np


def format_value(value: Any) -> str:
    """
    Format a CSV cell.
    
    Floats use the shortest round-trip repr ('.' decimal separator on every
    platform); infinities are written as 'inf'.
    
    Args:
        value: Cell value
    
    Returns:
        Cell text
    """
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(data: Any, indent: int = 2) -> str:
    """JSON text with sorted keys and a trailing newline; NaN/inf are rejected."""
    return json.dumps(
        data, sort_keys=True, indent=indent, ensure_ascii=False,
        allow_nan=False, default=_json_default,
    ) + "\n"


def compact_json(data: Any) -> str:
    """Single-line canonical JSON (used for hashing)."""
    return json.dumps(
        data, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
        allow_nan=False, default=_json_default,
    )
