"""Run configuration: a single JSON document validated against ``CONFIG_SCHEMA``."""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from .estimate import PAPER_DS_MAX_KM, PAPER_DT_MAX
from .geometry import EARTH_RADIUS_KM
from .models import DEFAULT_MAX_SIZE
from .validity import DEFAULT_LAGS, DEFAULT_N, DEFAULT_NODES

_range = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_bound = {"type": "array", "items": {"type": ["number", "null"]}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "spherecov run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "radius_km": {"type": "number", "exclusiveMinimum": 0},
        "max_matrix_size": {"type": "integer", "minimum": 1},
        "model": {
            "type": "object",
            "required": ["family"],
            "properties": {"family": {"type": "string"}},
        },
        "fit_result": {"type": "string"},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["path"],
            "properties": {
                "path": {"type": "string"},
                "demean": {"type": "boolean"},
                "m": {"type": "integer", "minimum": 1},
                "units": {"type": "string"},
            },
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "n_sites": {"type": "integer", "minimum": 1},
                "n_times": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "lon_range": _range,
                "lat_range": _range,
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n_reps": {"type": "integer", "minimum": 1}},
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"type": "string"},
                "init": {"type": "object", "additionalProperties": {"type": "number"}},
                "bounds": {"type": "object", "additionalProperties": _bound},
                "ds_max_km": {"type": "number", "minimum": 0},
                "dt_max": {"type": "number", "minimum": 0},
                "restarts": {"type": "integer", "minimum": 1},
                "max_iter": {"type": "integer", "minimum": 1},
                "fatol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "schoenberg": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d": {"type": "integer", "minimum": 1},
                "N": {"type": "integer", "minimum": 0},
                "nodes": {"type": "integer", "minimum": 2},
                "mode": {"enum": ["matrices", "functions"]},
                "lag": {"type": "number"},
                "lags": {"type": "integer", "minimum": 1},
                "lag_step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "validate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_sites": {"type": "integer", "minimum": 1},
                "n_times": {"type": "integer", "minimum": 1},
                "d": {"type": "integer", "minimum": 1},
                "N": {"type": "integer", "minimum": 0},
            },
        },
        "predict": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "targets_path": {"type": "string"},
                "targets": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["lon", "lat", "time", "var"],
                        "properties": {
                            "lon": {"type": "number"}, "lat": {"type": "number"},
                            "time": {"type": "number"}, "var": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "radius_km": EARTH_RADIUS_KM,
    "max_matrix_size": DEFAULT_MAX_SIZE,
    "design": {"n_sites": 50, "n_times": 5, "m": 2, "lon_range": [50.0, 150.0], "lat_range": [-50.0, 0.0]},
    "simulate": {"n_reps": 1},
    "fit": {"ds_max_km": PAPER_DS_MAX_KM, "dt_max": PAPER_DT_MAX, "restarts": 3, "max_iter": 2000,
            "fatol": 1e-8},
    "schoenberg": {"d": 2, "N": DEFAULT_N, "nodes": DEFAULT_NODES, "mode": "matrices", "lag": 0.0,
                   "lags": DEFAULT_LAGS, "lag_step": 1.0},
    "validate": {"n_sites": 30, "n_times": 5, "d": 2, "N": 30},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Read, validate and default-fill a configuration file (``None`` means empty)."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    raw = _merge(raw, overrides or {})
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {loc}: {exc.message}") from None
    return _merge(DEFAULTS, raw)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
