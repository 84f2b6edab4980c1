"""Run configuration: JSON parsing, schema validation and unit conversion.

Config files measure ``d1`` and ``epsilon`` in units of ``omega0`` and times
in units of ``1/omega0``. Conversion to absolute units happens once, here.
Charge and hbar are 1, so a current equals a rate.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import jsonschema

from .errors import SchemaError
from .model import InitialCondition, SystemParams, validate_params

DEFAULTS = {
    "omega0": 1.0,
    "epsilon": 0.0,
    "d1": 32.0,
    "init": "left",
    "solver": "ode",
    "t_end": 1.0,
    "t_samples": 11,
    "tol": 1e-10,
    "tail_epsilon": 1e-12,
    "seed": 0,
    "output": "out",
}

_positive = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "omega0": _positive,
        "epsilon": {"type": "number"},
        "d1": {"type": "number", "minimum": 0},
        "init": {"enum": [k.value for k in InitialCondition]},
        "solver": {"enum": ["ode", "spectral", "closed_form"]},
        "t_end": _positive,
        "t_samples": {"type": "integer", "minimum": 1},
        "tol": _positive,
        "tail_epsilon": _positive,
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string", "minLength": 1},
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["continuous", "spontaneous", "observation"]},
                "thresholds": {"type": "array", "minItems": 1,
                               "items": {"type": "number", "minimum": 1}},
                "trajectories": {"type": "integer", "minimum": 2},
                "t0": {"type": "number", "minimum": 0},
                "t0_max": _positive,
                "t_ms": _positive,
            },
        },
        "detector": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "transmission": {"type": "number", "minimum": 0, "maximum": 1},
                "v_d": _positive,
                "delta_nu": _positive,
                "t1_obs": {"type": "number", "minimum": 0},
                "n1_obs": {"type": "integer", "minimum": 0},
            },
        },
    },
}

SCENARIO_DEFAULTS = {"kind": "observation", "thresholds": [4, 16, 64],
                     "trajectories": 10000}
DETECTOR_DEFAULTS = {"transmission": 0.5, "v_d": 6.283185307179586,
                     "delta_nu": 1.0}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``raw`` keeps the config-unit values."""

    params: SystemParams
    init: InitialCondition
    solver: str
    t_end: float
    t_samples: int
    tol: float
    tail_epsilon: float
    seed: int
    output: str
    scenario: dict
    detector: dict
    raw: dict

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def time(self, value: float) -> float:
        """Convert a time in units of ``1/omega0`` to absolute units."""
        return value / self.params.omega0


def _schema_error(err: jsonschema.ValidationError) -> SchemaError:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(set(err.instance) - allowed)
        name = extra[0] if extra else ""
        where = f"{path}.{name}" if path else name
        return SchemaError(where, f"unknown field {name!r}")
    return SchemaError(path, err.message)


def validate_config(data) -> dict:
    """Check ``data`` against the schema and return it with defaults filled."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0])
    full = {**DEFAULTS, **copy.deepcopy(data)}
    if "scenario" in full:
        full["scenario"] = {**SCENARIO_DEFAULTS, **full["scenario"]}
    if "detector" in full:
        full["detector"] = {**DETECTOR_DEFAULTS, **full["detector"]}
    return full


def build_config(data) -> RunConfig:
    full = validate_config(data)
    w = float(full["omega0"])
    params = SystemParams(omega0=w, d1=float(full["d1"]) * w,
                          epsilon=float(full["epsilon"]) * w)
    validate_params(params)
    return RunConfig(
        params=params,
        init=InitialCondition.parse(full["init"]),
        solver=full["solver"],
        t_end=float(full["t_end"]) / w,
        t_samples=int(full["t_samples"]),
        tol=float(full["tol"]),
        tail_epsilon=float(full["tail_epsilon"]),
        seed=int(full["seed"]),
        output=full["output"],
        scenario=full.get("scenario", dict(SCENARIO_DEFAULTS)),
        detector=full.get("detector", dict(DETECTOR_DEFAULTS)),
        raw=full,
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc.msg} at line {exc.lineno}")
    return build_config(data)
