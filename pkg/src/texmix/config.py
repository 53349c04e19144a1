"""Run configuration: JSON schema, validation and flag merging."""

import copy
import json
from dataclasses import asdict, fields

import jsonschema

from . import net as fnet
from .errors import InvalidConfigError
from .synthesis import SynthesisConfig

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}

SYNTHESIS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "stat_kind": {"enum": ["gram", "correlation"]},
        "tap_weights": {"oneOf": [{"type": "null"},
                                  {"type": "array", "items": _NONNEG, "minItems": 1}]},
        "method": {"enum": ["adam", "lbfgs"]},
        "step_size": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "stop_tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "alpha": _NONNEG,
        "content_mode": {"enum": ["content_tap", "all_taps"]},
        "lag_constraint": {"type": "boolean"},
        "lag_pairs": {"type": "array", "items": {
            "type": "array", "items": {"type": "integer", "minimum": 0},
            "minItems": 2, "maxItems": 2}},
        "lbfgs_history": {"type": "integer", "minimum": 1},
    },
}

EXTRACTOR_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["source"],
         "properties": {"source": {"const": "builtin-desk"},
                        "seed": {"type": "integer", "minimum": 0}}},
        {"type": "object", "additionalProperties": False, "required": ["source", "path"],
         "properties": {"source": {"const": "weights"}, "path": {"type": "string"},
                        "taps": {"type": "array", "items": {"type": "integer"}},
                        "content_tap": {"type": "integer"}}},
        {"type": "object", "additionalProperties": False,
         "required": ["source", "seed", "architecture"],
         "properties": {"source": {"const": "random"},
                        "seed": {"type": "integer", "minimum": 0},
                        "architecture": {"type": "array", "minItems": 1},
                        "taps": {"type": "array", "items": {"type": "integer"}},
                        "content_tap": {"type": "integer"}}},
    ]
}

RUN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": ["stats", "synth", "mix", "morph", "gauss"]},
        "extractor": EXTRACTOR_SCHEMA,
        "synthesis": SYNTHESIS_SCHEMA,
        "init": {"oneOf": [{"const": "noise"},
                           {"type": "object", "additionalProperties": False,
                            "required": ["image"], "properties": {"image": {"type": "string"}}}]},
        "images": {"type": "object", "additionalProperties": False,
                   "properties": {k: {"type": "string"} for k in
                                  ("exemplar", "a", "b", "content", "style_a", "style_b")}},
        "output": {"type": "string"},
        "rho": {"type": "number", "minimum": 0, "maximum": 1},
        "grid": {"type": "integer", "minimum": 2},
        "incremental": {"type": "boolean"},
        "figures": {"type": "boolean"},
    },
}


class ConfigError(InvalidConfigError):
    """Schema violation; ``pointer`` is the JSON pointer of the offending value."""

    def __init__(self, pointer, message):
        super().__init__(f"config {pointer or '/'}: {message}")
        self.pointer = pointer


def json_pointer(path):
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate(doc):
    validator = jsonschema.Draft202012Validator(RUN_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        # for oneOf failures, report the most specific sub-error
        while err.context:
            err = max(err.context, key=lambda e: len(e.absolute_path))
        raise ConfigError(json_pointer(err.absolute_path), err.message)
    return doc


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from exc
    return validate(doc)


def merge(doc, overrides):
    """Return a copy of ``doc`` with dotted-key ``overrides`` applied (None skipped)."""
    out = copy.deepcopy(doc)
    for key, value in overrides.items():
        if value is None:
            continue
        target = out
        *parents, leaf = key.split(".")
        for p in parents:
            target = target.setdefault(p, {})
        target[leaf] = value
    return validate(out)


def synthesis_config(doc):
    known = {f.name for f in fields(SynthesisConfig)}
    params = {k: v for k, v in doc.get("synthesis", {}).items() if k in known}
    return SynthesisConfig(**params)


def resolve(doc, cfg):
    """Fill every synthesis default so the persisted config is self-contained."""
    out = copy.deepcopy(doc)
    out["synthesis"] = asdict(cfg)
    out.setdefault("extractor", {"source": "builtin-desk", "seed": fnet.DESK_SEED})
    if out["extractor"].get("source") == "builtin-desk":
        out["extractor"].setdefault("seed", fnet.DESK_SEED)
    return out


def build_extractor(doc):
    spec = doc.get("extractor", {"source": "builtin-desk"})
    source = spec["source"]
    if source == "builtin-desk":
        return fnet.desk_backbone(spec.get("seed", fnet.DESK_SEED))
    if source == "weights":
        return fnet.load_weights(spec["path"], spec.get("taps"), spec.get("content_tap"))
    return fnet.random_init(spec["architecture"], seed=spec["seed"],
                            taps=spec.get("taps"), content_tap=spec.get("content_tap"))


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
