"""Stable JSON report format shared by the command-line tools.

Reports serialize canonically: sorted keys, two-space indent, trailing
newline, no NaN or infinity.  Rerunning a command with the same seed
must reproduce the bytes exactly, whatever the worker count, so wall
time is never part of the payload; the CLI prints it to stderr instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import jsonschema

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "params", "seed", "results", "bounds", "pass"],
    "additionalProperties": False,
    "properties": {
        "command": {"type": "string", "minLength": 1},
        "params": {"type": "object"},
        "seed": {"type": "integer"},
        "results": {"type": "object"},
        "bounds": {"type": "object", "additionalProperties": {"type": "number"}},
        "pass": {"type": "object", "additionalProperties": {"type": "boolean"}},
    },
}


def jsonable(value: Any) -> Any:
    """Recursively coerce numpy scalars, tuples and dataclass-free
    containers into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, bool):
        return value
    if hasattr(value, "item") and callable(value.item):  # numpy scalar
        return value.item()
    if value is None or isinstance(value, (int, float, str)):
        return value
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


@dataclass(frozen=True)
class ExperimentReport:
    """One command run: its inputs, measured results, evaluated bounds,
    and a named pass/fail flag per assertion."""

    command: str
    params: dict[str, Any]
    seed: int
    results: dict[str, Any]
    bounds: dict[str, float] = field(default_factory=dict)
    passed: dict[str, bool] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def payload(self) -> dict[str, Any]:
        out = {
            "command": self.command,
            "params": jsonable(self.params),
            "seed": int(self.seed),
            "results": jsonable(self.results),
            "bounds": {k: float(v) for k, v in self.bounds.items()},
            "pass": {k: bool(v) for k, v in self.passed.items()},
        }
        validate_report(out)
        return out

    def to_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def validate_report(payload: dict[str, Any]) -> None:
    """Raise jsonschema.ValidationError if the payload is malformed."""
    jsonschema.validate(payload, REPORT_SCHEMA)


def parse_report(text: str) -> ExperimentReport:
    """Inverse of to_json; validates before constructing."""
    payload = json.loads(text)
    validate_report(payload)
    return ExperimentReport(
        command=payload["command"],
        params=payload["params"],
        seed=payload["seed"],
        results=payload["results"],
        bounds=payload["bounds"],
        passed=payload["pass"],
    )
