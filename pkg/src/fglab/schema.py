"""Validation of run reports against the shipped schema file.

A small hand-rolled validator covering the subset of JSON Schema the report
schema uses (type, required, enum, pattern, properties, items,
additionalProperties, minimum); keeps the package dependency-light while the
schema file stays standard enough for external tooling.
"""

from __future__ import annotations

import json
import re
from importlib import resources

_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "integer": int,
    "boolean": bool,
    "null": type(None),
}


def load_schema() -> dict:
    ref = resources.files("fglab").joinpath("data/report.schema.json")
    return json.loads(ref.read_text())


def _check_type(value, tp) -> bool:
    if isinstance(tp, list):
        return any(_check_type(value, t) for t in tp)
    py = _TYPES[tp]
    if py is int and isinstance(value, bool):
        return False
    return isinstance(value, py)


def _validate(value, schema: dict, path: str, errors: list):
    tp = schema.get("type")
    if tp is not None and not _check_type(value, tp):
        errors.append(f"{path}: expected {tp}, got {type(value).__name__}")
        return
    if "enum" in schema and value not in schema["enum"]:
        errors.append(f"{path}: {value!r} not in {schema['enum']}")
    if "pattern" in schema and isinstance(value, str):
        if not re.match(schema["pattern"], value):
            errors.append(f"{path}: {value!r} does not match {schema['pattern']}")
    if "minimum" in schema and isinstance(value, int) and not isinstance(value, bool):
        if value < schema["minimum"]:
            errors.append(f"{path}: {value} below minimum {schema['minimum']}")
    if isinstance(value, dict):
        for key in schema.get("required", []):
            if key not in value:
                errors.append(f"{path}: missing required key {key!r}")
        props = schema.get("properties", {})
        if schema.get("additionalProperties") is False:
            extra = set(value) - set(props)
            if extra:
                errors.append(f"{path}: unexpected keys {sorted(extra)}")
        for key, sub in props.items():
            if key in value:
                _validate(value[key], sub, f"{path}.{key}", errors)
    if isinstance(value, list) and "items" in schema:
        for i, item in enumerate(value):
            _validate(item, schema["items"], f"{path}[{i}]", errors)


def validate_report(report: dict) -> list:
    """Returns a list of schema violations; empty means valid."""
    errors: list = []
    _validate(report, load_schema(), "$", errors)
    return errors
