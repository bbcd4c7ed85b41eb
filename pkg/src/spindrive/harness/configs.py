"""JSON config files for the command line tools: schemas and loading.

One config file per subcommand.  Validation errors carry the dotted path of
the offending field so a bad config is diagnosable without reading schemas.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from ..drives import DRIVE_KINDS
from ..errors import ConfigError
from ..models import MODEL_KINDS, IntegratorConfig, SpinModel

STRATEGIES = ("lstm_full", "fcnn_full", "fcnn_step")
INITIAL_STATES = ("random", "all_up")

_MODEL = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(MODEL_KINDS)},
        "n_sites": {"type": "integer", "minimum": 1},
        "coupling": {"type": "number"},
        "g": {"type": "number"},
        "jy": {"type": "number"},
        "jz": {"type": "number"},
    },
    "required": ["kind", "n_sites"],
    "additionalProperties": False,
}

_DRIVE = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(DRIVE_KINDS)},
        "params": {"type": "object"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_INTEGRATOR = {
    "type": "object",
    "properties": {
        "atol": {"type": "number", "exclusiveMinimum": 0},
        "rtol": {"type": "number", "exclusiveMinimum": 0},
        "max_steps": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_HIDDEN = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

_CLASSES = {
    "type": "array",
    "items": {"enum": ["gp", "periodic", "quench"]},
    "minItems": 1,
}

_TRAIN_BLOCK = {
    "type": "object",
    "properties": {
        "n_samples": {"type": "integer", "minimum": 1},
        "strategy": {"enum": list(STRATEGIES)},
        "hidden_sizes": _HIDDEN,
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0},
        "drive": _DRIVE,
    },
    "additionalProperties": False,
}

_EVAL_BLOCK = {
    "type": "object",
    "properties": {
        "n_samples": {"type": "integer", "minimum": 1},
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "classes": _CLASSES,
        "entropy": {"type": "boolean"},
        "initial_state": {"enum": list(INITIAL_STATES)},
    },
    "additionalProperties": False,
}

SCHEMAS = {
    "gen-data": {
        "type": "object",
        "properties": {
            "out_dir": {"type": "string"},
            "model": _MODEL,
            "drive": _DRIVE,
            "n_samples": {"type": "integer", "minimum": 1},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "initial_p": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
            "l_max": {"type": ["integer", "null"], "minimum": 0},
            "integrator": _INTEGRATOR,
            "val_fraction": {"type": "number", "minimum": 0, "maximum": 0.5},
            "test_fraction": {"type": "number", "minimum": 0, "maximum": 0.5},
        },
        "required": ["out_dir", "model", "drive", "n_samples"],
        "additionalProperties": False,
    },
    "train": {
        "type": "object",
        "properties": {
            "dataset": {"type": "string"},
            "checkpoint": {"type": "string"},
            "strategy": {"enum": list(STRATEGIES)},
            "hidden_sizes": _HIDDEN,
            "epochs": {"type": "integer", "minimum": 1},
            "batch_size": {"type": "integer", "minimum": 1},
            "learning_rate": {"type": "number", "exclusiveMinimum": 0},
            "microbatch_size": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
            "loss_csv": {"type": "string"},
            "resume": {"type": "string"},
        },
        "required": ["dataset", "checkpoint", "strategy"],
        "additionalProperties": False,
    },
    "eval": {
        "type": "object",
        "properties": {
            "checkpoint": {"type": "string"},
            "dataset": {"type": "string"},
            "out_dir": {"type": "string"},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "n_samples": {"type": "integer", "minimum": 1},
            "classes": _CLASSES,
            "seed": {"type": "integer", "minimum": 0},
            "initial_state": {"enum": list(INITIAL_STATES)},
            "entropy": {"type": "boolean"},
            "integrator": _INTEGRATOR,
        },
        "required": ["checkpoint", "dataset", "out_dir"],
        "additionalProperties": False,
    },
    "baseline": {
        "type": "object",
        "properties": {
            "checkpoint": {"type": "string"},
            "dataset": {"type": "string"},
            "out_dir": {"type": "string"},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "n_samples": {"type": "integer", "minimum": 1},
            "classes": _CLASSES,
            "seed": {"type": "integer", "minimum": 0},
            "initial_state": {"enum": list(INITIAL_STATES)},
            "integrator": _INTEGRATOR,
        },
        "required": ["checkpoint", "dataset", "out_dir"],
        "additionalProperties": False,
    },
    "bench": {
        "type": "object",
        "properties": {
            "out_dir": {"type": "string"},
            "sizes": {
                "type": "array",
                "items": {"type": "integer", "minimum": 2},
                "minItems": 2,
            },
            "n_instances": {"type": "integer", "minimum": 1},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "hidden_sizes": _HIDDEN,
            "seed": {"type": "integer", "minimum": 0},
        },
        "required": ["out_dir"],
        "additionalProperties": False,
    },
    "sweep-g": {
        "type": "object",
        "properties": {
            "out_dir": {"type": "string"},
            "g_values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "n_sites": {"type": "integer", "minimum": 1},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "train": _TRAIN_BLOCK,
            "eval": _EVAL_BLOCK,
        },
        "required": ["out_dir", "g_values"],
        "additionalProperties": False,
    },
    "heisenberg": {
        "type": "object",
        "properties": {
            "out_dir": {"type": "string"},
            "n_sites": {"type": "integer", "minimum": 2},
            "t_max": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "train": _TRAIN_BLOCK,
            "eval": _EVAL_BLOCK,
        },
        "required": ["out_dir"],
        "additionalProperties": False,
    },
    "dump-csv": {
        "type": "object",
        "properties": {
            "dataset": {"type": "string"},
            "split": {"enum": ["train", "val", "test"]},
            "out": {"type": "string"},
        },
        "required": ["dataset", "split", "out"],
        "additionalProperties": False,
    },
}


def validate_config(cfg, command: str, source: str = "config"):
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{source}: {where}: {err.message}")


def load_config(path, command: str) -> dict:
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: <root>: expected a JSON object")
    validate_config(cfg, command, source=str(path))
    return cfg


def build_model(block: dict) -> SpinModel:
    return SpinModel(
        kind=block["kind"],
        n_sites=block["n_sites"],
        coupling=block.get("coupling", 1.0),
        g=block.get("g", 0.0),
        jy=block.get("jy", 1.0),
        jz=block.get("jz", 1.0),
    )


def model_from_manifest(manifest: dict) -> SpinModel:
    return build_model(manifest["model"])


def build_integrator(block: dict | None) -> IntegratorConfig:
    if not block:
        return IntegratorConfig()
    return IntegratorConfig(
        atol=block.get("atol", 1e-9),
        rtol=block.get("rtol", 1e-9),
        max_steps=block.get("max_steps", 10_000_000),
    )
