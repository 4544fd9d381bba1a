"""Run configuration: defaults, validation and seed derivation.

A config is a nested JSON object. Unknown keys are rejected, every default is
materialized, and the result is a plain dict that round-trips through JSON.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import numpy as np

COMMANDS = (
    "randomize",
    "taildiag",
    "evolve",
    "norms",
    "trilinear",
    "picard",
    "groundstate",
    "mcurve",
    "stability",
    "asstability",
    "perturb",
    "report",
)

_GS_GRID = {"grid": {"d": 3, "m": 48, "half_len": float(8 * np.pi)}}

BASE = {
    "seed": 0,
    "output_dir": "runs",
    "grid": {"d": 2, "m": 64, "half_len": float(8 * np.pi)},
    "potential": {"kind": "default_well", "width": 2.0, "fraction": 0.5},
    "norms": {"eps": 0.01, "s_target": 0.5, "dyadic_band": None, "quadrature": "trapezoid"},
    "evolve": {
        "dt": 1e-3,
        "nonlinearity": "cubic",
        "sigma": 1.0,
        "q": None,
        "include_critical": True,
        "snapshot_every": 100,
        "scheme": "strang",
        "horizon": 1.0,
    },
    "picard": {"delta": 0.05, "max_iter": 50, "tol": 1e-8, "interval": [0.0, 0.25], "dt": 1 / 256, "sigma": 1.0},
    "datum": {"kind": "gaussian", "amplitude": 1.0, "width": 2.0, "s": 0.5, "kcut": 4.0, "momentum": 0.3, "path": None},
}

# the "experiment" block, one schema per command
EXPERIMENTS = {
    "randomize": {"n_samples": 1, "law": "gaussian"},
    "taildiag": {"n": 500, "lambdas": None, "horizon": 0.5, "dt": 1 / 64, "amplitude": 1.0},
    "evolve": {},
    "norms": {"horizon": 0.5, "dt": 1 / 64, "randomized": True},
    "trilinear": {"cases": [1, 2, 3, 4, 5, 6, 7, 8], "bands": None, "horizon": 0.25, "dt": 1 / 64},
    "picard": {"randomized": True, "amplitude": 0.0025, "scan": False, "t_max": 4.0},
    "groundstate": {"q": 2.5, "critical": True, "a_fraction": 0.25, "tol": 1e-9, "max_iter": 20000, "seed_width": 3.0},
    "mcurve": {"q": 2.5, "critical": True, "a_fractions": [0.0625, 0.125, 0.25], "tol": 1e-9, "widths": [2.0, 3.0, 4.5]},
    "stability": {
        "q": 2.5,
        "critical": True,
        "a_fraction": 0.25,
        "delta": 1e-3,
        "n": 20,
        "horizon": 10.0,
        "dt": 5e-3,
        "sample_dt": 0.25,
        "budget_factor": 10.0,
        "include_unperturbed": True,
        "profile_path": None,
    },
    "asstability": {
        "q": 2.5,
        "critical": True,
        "a_fraction": 0.25,
        "s": 0.6,
        "delta": 1e-3,
        "n": 50,
        "horizon": 10.0,
        "dt": 5e-3,
        "sample_dt": 0.25,
        "budget_factor": 10.0,
        "profile_path": None,
    },
    "perturb": {"forcing_scales": [0.01, 0.005], "amplitude": 0.5},
    "report": {"manifests": []},
}

GRID_OVERRIDES = {c: _GS_GRID for c in ("groundstate", "mcurve", "stability", "asstability")}
# randomized-data experiments default to an H^s profile at the edge of H^{1/2}
_HS = {"datum": {"kind": "hs"}}
DATUM_OVERRIDES = {c: _HS for c in ("taildiag", "norms", "trilinear", "picard", "perturb", "randomize")}
POTENTIAL_KEYS = {"kind", "width", "fraction", "depth", "strength", "exponent", "cutoff", "path"}


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit status 2)."""


def _merge(defaults: dict, given: dict, where: str) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"unknown key {where}{k!r}")
        if isinstance(defaults[k], dict) and not isinstance(v, dict):
            raise ConfigError(f"{where}{k} must be an object")
        if isinstance(defaults[k], dict):
            out[k] = _merge(defaults[k], v, f"{where}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def defaults_for(command: str) -> dict:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    base = copy.deepcopy(BASE)
    base = _merge(base, GRID_OVERRIDES.get(command, {}), "")
    base = _merge(base, DATUM_OVERRIDES.get(command, {}), "")
    base["experiment"] = copy.deepcopy(EXPERIMENTS[command])
    return base


def materialize(command: str, given: dict | None = None) -> dict:
    """Defaults for ``command`` overlaid with ``given``; unknown keys raise."""
    given = dict(given or {})
    base = defaults_for(command)
    pot = given.get("potential")
    if pot is not None:
        if not isinstance(pot, dict):
            raise ConfigError("potential must be an object")
        bad = set(pot) - POTENTIAL_KEYS
        if bad:
            raise ConfigError(f"unknown key potential.{sorted(bad)[0]!r}")
        base["potential"] = copy.deepcopy(pot)
        given.pop("potential")
    cfg = _merge(base, given, "")
    _check(cfg)
    return cfg


def _check(cfg: dict):
    g = cfg["grid"]
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError("seed must be an integer")
    if not (isinstance(g["d"], int) and isinstance(g["m"], int)):
        raise ConfigError("grid.d and grid.m must be integers")


def load(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, fixed indentation)."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (tuple, set)):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def derive_seed(seed: int, label: str) -> int:
    """63-bit seed for a labeled sub-task of a run."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed).to_bytes(8, "little", signed=True))
    h.update(label.encode())
    return int.from_bytes(h.digest(), "little") >> 1
