import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import numpy as np

from zoomfem.multiscale.protocol import ConfigError, OutputError

logger = logging.getLogger(__name__)


def output_dir(directory: Union[str, Path]) -> Path:
    directory = Path(directory)
    try:
        directory.mkdir(exist_ok=True, parents=True)
    except OSError as e:
        raise OutputError(e, directory) from e
    return directory


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OutputError(e, path) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def write_json(path: Union[str, Path], document: Any) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(e, path) from e
    return path


def merged(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """
    a deep copy of defaults with overrides applied; nested objects merge, everything else replaces
    """
    out = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merged(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """
    least squares slope of log y against log x
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 2:
        raise ConfigError(f"a slope needs two positive samples, got {int(keep.sum())}")
    slope, _ = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope)
