"""
Settings for the command-line front end.

``settings/settings.json`` is the hand-editable main config. A missing or
unreadable file falls back to the built-in ``DEFAULTS``; a partial file is
merged over them key by key.

Environment:
  MOD1_SETTINGS  path to an alternative settings file
  MOD1_THREADS   upper bound on experiment trial parallelism
"""

from __future__ import annotations

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from solver.denoise import DenoiseConfig
from solver.manifold import SolverOptions

logger = logging.getLogger(__name__)

SETTINGS_PATH = Path(__file__).resolve().parent / "settings" / "settings.json"

DEFAULTS: Dict[str, Any] = {
    "log_level": "WARNING",
    "denoise": {
        "k": 2,
        "lambda": 0.1,
        "method": "trs",
        "iterations": 1,
        "tol": 1e-9,
        "bm_rank": 3,
    },
    "manifold": {
        "max_iterations": 2000,
        "tolerance": 1e-6,
        "armijo_c": 1e-4,
        "shrink": 0.5,
        "accelerate": False,
    },
    "unwrap": {
        "method": "ols",
        "zeta": 0.5,
        "cg_rtol": 1e-10,
    },
    "metrics": {
        "shift_bins": 100,
    },
    "experiment": {
        "seeds": 20,
        "bound_epsilon": 0.05,
        "parallel": 1,
    },
}


def settings_path() -> Path:
    override = os.environ.get("MOD1_SETTINGS")
    return Path(override) if override else SETTINGS_PATH


def _load_settings(path: Optional[Path] = None) -> Dict[str, Any]:
    path = path or settings_path()
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        return {}
    except Exception as e:
        logger.warning("ignoring settings file %s: %s", path, e)
        return {}
    if not isinstance(data, dict):
        logger.warning("ignoring settings file %s: top level is not an object", path)
        return {}
    return data


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_settings(path: Optional[Path] = None) -> Dict[str, Any]:
    """``DEFAULTS`` with the settings file merged on top."""
    return _merge(DEFAULTS, _load_settings(path))


def thread_cap() -> Optional[int]:
    """Value of ``MOD1_THREADS`` if set to a positive integer."""
    raw = os.environ.get("MOD1_THREADS")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning("MOD1_THREADS=%r is not an integer; ignored", raw)
        return None
    return value if value > 0 else None


def effective_workers(requested: int) -> int:
    cap = thread_cap()
    workers = max(1, int(requested))
    return min(workers, cap) if cap is not None else workers


def solver_options(settings: Dict[str, Any], seed: int = 0) -> SolverOptions:
    m = settings["manifold"]
    return SolverOptions(
        max_iterations=int(m["max_iterations"]),
        tolerance=float(m["tolerance"]),
        armijo_c=float(m["armijo_c"]),
        shrink=float(m["shrink"]),
        seed=seed,
        accelerate=bool(m["accelerate"]),
    )


def denoise_config(settings: Dict[str, Any], seed: int = 0, **overrides: Any) -> DenoiseConfig:
    """``DenoiseConfig`` from the ``denoise`` section; keyword overrides that are None are ignored."""
    d = settings["denoise"]
    values = dict(
        lam=float(d["lambda"]),
        k=int(d["k"]),
        method=d["method"],
        iterations=int(d["iterations"]),
        tol=float(d["tol"]),
        bm_rank=int(d["bm_rank"]),
    )
    values.update({key: value for key, value in overrides.items() if value is not None})
    return DenoiseConfig(solver=solver_options(settings, seed), **values)
