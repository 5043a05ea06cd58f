"""Loading and overriding the limit table.

Schema (JSON)::

    {"schema": "pmulab-limits/1",
     "classes": {"<class>": {"<key>": {"value": float | null, "unit": str,
                                       "provenance": str, "locked": bool}}}}

A ``null`` value marks a metric as not applicable.  Override files use the
same layout and may list any subset of entries; changing a locked entry is
an error.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

SCHEMA = "pmulab-limits/1"


@dataclass(frozen=True)
class Limit:
    value: float | None
    unit: str
    provenance: str
    locked: bool = False

    def to_dict(self) -> dict:
        return {"value": self.value, "unit": self.unit, "provenance": self.provenance,
                "locked": self.locked}


class LimitTable:
    def __init__(self, classes: dict[str, dict[str, Limit]]):
        self.classes = classes

    def __getitem__(self, test_class: str) -> dict[str, Limit]:
        return self.classes[test_class]

    def value(self, test_class: str, key: str) -> float | None:
        return self.classes[test_class][key].value

    def to_dict(self) -> dict:
        return {c: {k: v.to_dict() for k, v in entries.items()}
                for c, entries in self.classes.items()}

    def with_overrides(self, overrides: dict) -> "LimitTable":
        out = {c: dict(e) for c, e in self.classes.items()}
        for cls, entries in overrides.get("classes", {}).items():
            if cls not in out:
                raise ValueError(f"unknown test class {cls!r}")
            for key, raw in entries.items():
                base = out[cls].get(key)
                new = _parse_entry(cls, key, raw, base)
                if base is not None and base.locked and new.value != base.value:
                    raise ValueError(f"{cls}.{key} is locked at {base.value} {base.unit}")
                out[cls][key] = Limit(new.value, new.unit, new.provenance,
                                      base.locked if base is not None else new.locked)
        return LimitTable(out)


def _parse_entry(cls: str, key: str, raw, base: Limit | None) -> Limit:
    if not isinstance(raw, dict) or "value" not in raw:
        raise ValueError(f"{cls}.{key}: entry must be an object with a 'value' field")
    value = raw["value"]
    if value is not None:
        if isinstance(value, bool) or not isinstance(value, (int, float)) \
                or not math.isfinite(value) or value < 0:
            raise ValueError(f"{cls}.{key}: value must be a non-negative number or null")
        value = float(value)
    unit = raw.get("unit", base.unit if base else None)
    provenance = raw.get("provenance", "user override" if base else None)
    if unit is None or provenance is None:
        raise ValueError(f"{cls}.{key}: unit and provenance are required")
    return Limit(value, str(unit), str(provenance), bool(raw.get("locked", False)))


def _from_document(doc: dict) -> LimitTable:
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported limit schema {doc.get('schema')!r}")
    return LimitTable({cls: {k: _parse_entry(cls, k, raw, None) for k, raw in entries.items()}
                       for cls, entries in doc["classes"].items()})


def default_limits() -> LimitTable:
    text = resources.files(__package__).joinpath("limits_mclass.json").read_text(encoding="utf-8")
    return _from_document(json.loads(text))


def load_limits(path: str | Path | None = None) -> LimitTable:
    """Default table, optionally overridden by the JSON file at ``path``."""
    table = default_limits()
    if path is None:
        return table
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "schema" in doc and doc["schema"] != SCHEMA:
        raise ValueError(f"unsupported limit schema {doc['schema']!r}")
    return table.with_overrides(doc)
