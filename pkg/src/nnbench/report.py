"""Report emission: run manifests, stable CSV/JSON writers, schema checks.

Reproducibility contract: given an equal manifest (timestamp excepted),
every non-timing artifact is byte-identical across reruns.  JSON is written
with sorted keys and a fixed separator style; CSV is RFC-4180, UTF-8, with a
mandatory header row.  Wall times and energies live in timings.json /
scorecards, which are explicitly timing-derived artifacts.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .registry.configs import REGISTRY_VERSION


@dataclass
class RunManifest:
    """Reproducibility envelope embedded in every JSON report."""

    command: list[str]
    seed: int
    budget: int
    backends: list[dict] = field(default_factory=list)
    tool_version: str = __version__
    registry_version: str = REGISTRY_VERSION

    def stable_obj(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "registry_version": self.registry_version,
            "command": list(self.command),
            "seed": self.seed,
            "budget": self.budget,
            "backends": self.backends,
        }

    def full_obj(self) -> dict:
        obj = self.stable_obj()
        obj["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    return path


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])
    return path


def schemas_dir() -> Path:
    return Path(__file__).resolve().parents[2] / "schemas"


def load_schema(name: str) -> dict:
    with open(schemas_dir() / f"{name}.schema.json", "r", encoding="utf-8") as f:
        return json.load(f)


class SchemaViolation(ValueError):
    pass


def validate_schema(obj, schema, path="$") -> None:
    """Minimal JSON-schema checker for the subset the shipped schemas use:
    type, properties, required, items, enum, additionalProperties."""
    t = schema.get("type")
    if t:
        ok = {
            "object": lambda v: isinstance(v, dict),
            "array": lambda v: isinstance(v, list),
            "string": lambda v: isinstance(v, str),
            "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            "boolean": lambda v: isinstance(v, bool),
            "null": lambda v: v is None,
        }
        types = t if isinstance(t, list) else [t]
        if not any(ok[x](obj) for x in types):
            raise SchemaViolation(f"{path}: expected {t}, got {type(obj).__name__}")
    if "enum" in schema and obj not in schema["enum"]:
        raise SchemaViolation(f"{path}: {obj!r} not in {schema['enum']}")
    if isinstance(obj, dict):
        for req in schema.get("required", []):
            if req not in obj:
                raise SchemaViolation(f"{path}: missing required field {req!r}")
        props = schema.get("properties", {})
        for key, sub in props.items():
            if key in obj:
                validate_schema(obj[key], sub, f"{path}.{key}")
        if schema.get("additionalProperties") is False:
            extra = set(obj) - set(props)
            if extra:
                raise SchemaViolation(f"{path}: unexpected fields {sorted(extra)}")
    if isinstance(obj, list) and "items" in schema:
        for i, item in enumerate(obj):
            validate_schema(item, schema["items"], f"{path}[{i}]")
