"""JSON configuration schemas for the command-line tool.

Every schema rejects unknown keys. Builders turn validated dictionaries into
the library's dataclasses.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import jsonschema

from .analytic import ThresholdTriple
from .paramsolve import LengthScaleSpec
from .topopt2d import BetaSchedule, HeatProblem, RobustConfig


class ConfigError(ValueError):
    """Configuration file is missing, unreadable or fails validation."""


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_UNIT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

_SPEC = {
    "type": "object",
    "additionalProperties": False,
    "required": ["r_min_solid", "r_min_void"],
    "properties": {
        "label": {"type": "string"},
        "r_min_solid": _POS,
        "r_min_void": _POS,
        "eta_int": _UNIT,
        "grid_resolution": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "eta_ero_range": {"type": "array", "items": _UNIT, "minItems": 2, "maxItems": 2},
        "t_ero": _POS,
        "t_dil": _POS,
        "beta": _POS,
        "epsilon": _UNIT,
    },
}

SOLVE_SCHEMA = {
    "oneOf": [
        _SPEC,
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["cases"],
            "properties": {"cases": {"type": "array", "items": _SPEC, "minItems": 1}},
        },
    ]
}

_NUMERIC = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 4},
        "r_fil": _POS,
        "beta": _POS,
        "epsilon": _UNIT,
    },
}

CURVES_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "eta_int": _UNIT,
        "eta_step": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "numeric": {"oneOf": [{"type": "boolean"}, _NUMERIC]},
    },
}

VERIFY1D_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "studies": {
            "type": "array",
            "items": {"enum": ["agreement", "rounding", "cutoff", "alpha"]},
            "uniqueItems": True,
        },
        "agreement": _NUMERIC,
        "rounding": {
            "type": "object", "additionalProperties": False,
            "properties": {"r_fils": {"type": "array", "items": _POS}, "beta": _POS},
        },
        "cutoff": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "epsilons": {"type": "array", "items": _UNIT},
                "beta": _POS, "r_fil": _POS, "n": {"type": "integer", "minimum": 4},
            },
        },
        "alpha": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "alphas": {"type": "array", "items": {"type": "number", "minimum": 0,
                                                     "maximum": 0.5}},
                "r_fil": _POS, "n": {"type": "integer", "minimum": 4}, "beta": _POS,
            },
        },
    },
}

TOPOPT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "robust"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nx", "ny"],
            "properties": {
                "nx": {"type": "integer", "minimum": 1},
                "ny": {"type": "integer", "minimum": 1},
                "k0": _POS,
                "kmin": _POS,
                "penal": {"type": "number", "minimum": 1},
                "heat": _POS,
                "sink_side": {"enum": ["left", "right", "bottom", "top"]},
                "sink_center": {"type": "number", "minimum": 0, "maximum": 1},
                "sink_extent": {"type": "number", "minimum": 0, "maximum": 1},
                "symmetric": {"type": "boolean"},
            },
        },
        "robust": {
            "type": "object",
            "additionalProperties": False,
            "required": ["eta_ero", "eta_int", "eta_dil", "r_fil", "volume_fraction"],
            "properties": {
                "eta_ero": _UNIT,
                "eta_int": _UNIT,
                "eta_dil": _UNIT,
                "r_fil": _POS,
                "volume_fraction": _UNIT,
                "constraint_mode": {"enum": ["intermediate", "dilated", "minmax"]},
                "beta_schedule": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "start": _POS, "increment": {"type": "number", "minimum": 0},
                        "every": {"type": "integer", "minimum": 1}, "max_beta": _POS,
                        "final_beta": _POS, "final_iterations": {"type": "integer", "minimum": 0},
                    },
                },
                "max_iterations": {"type": "integer", "minimum": 1},
                "move_limit": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "bound_update_every": {"type": "integer", "minimum": 1},
                "track_compliances": {"type": "boolean"},
                "tol_change": {"type": "number", "minimum": 0},
            },
        },
        "seed": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["uniform"],
                 "properties": {"uniform": {"type": "number", "minimum": 0, "maximum": 1}}},
                {"type": "object", "additionalProperties": False, "required": ["raster"],
                 "properties": {"raster": {"type": "string"}}},
            ]
        },
        "measure_epsilon": _UNIT,
    },
}

MEASURE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["raster"],
    "properties": {
        "raster": {"type": "string"},
        "epsilon": _UNIT,
        "min_area": {"type": "integer", "minimum": 1},
    },
}

SCHEMAS = {
    "solve": SOLVE_SCHEMA,
    "curves": CURVES_SCHEMA,
    "verify1d": VERIFY1D_SCHEMA,
    "topopt": TOPOPT_SCHEMA,
    "measure": MEASURE_SCHEMA,
}


def load_config(path, command: str) -> dict:
    """Read and validate a JSON config for ``command``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    validate(data, command)
    return data


def validate(data: dict, command: str) -> None:
    try:
        jsonschema.validate(data, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {command} config at {where}: {exc.message}") from exc


def digest(data: dict) -> str:
    """SHA-256 of the canonical JSON form."""
    blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def build_specs(data: dict) -> list[tuple[str, LengthScaleSpec]]:
    cases = data["cases"] if "cases" in data else [data]
    out = []
    for k, case in enumerate(cases):
        kw = {
            "r_min_solid_int": case["r_min_solid"],
            "r_min_void_int": case["r_min_void"],
        }
        for key in ("eta_int", "grid_resolution", "t_ero", "t_dil", "beta", "epsilon"):
            if key in case:
                kw[key] = case[key]
        if "eta_ero_range" in case:
            kw["eta_ero_range"] = tuple(case["eta_ero_range"])
        out.append((case.get("label", f"case{k}"), LengthScaleSpec(**kw)))
    return out


def build_topopt(data: dict) -> tuple[HeatProblem, RobustConfig]:
    problem = HeatProblem(**data["problem"])
    r = dict(data["robust"])
    thresholds = ThresholdTriple(r.pop("eta_ero"), r.pop("eta_int"), r.pop("eta_dil"))
    if "beta_schedule" in r:
        r["beta_schedule"] = BetaSchedule(**r["beta_schedule"])
    return problem, RobustConfig(thresholds=thresholds, **r)
