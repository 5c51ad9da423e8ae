"""Structured run reports: JSON as the source of truth, CSV as a
projection, and a content digest that ignores timing so identical
configurations produce identical digests.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Any

SCHEMA_VERSION = 1

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "config", "cases", "passed", "anomalies", "digest"],
    "properties": {
        "schema_version": {"type": "integer"},
        "command": {"type": "string"},
        "config": {"type": "object"},
        "cases": {"type": "array", "items": {"type": "object"}},
        "passed": {"type": "boolean"},
        "anomalies": {"type": "array", "items": {"type": "string"}},
        "timing_seconds": {"type": "number"},
        "digest": {"type": "string"},
    },
}


def _canonical(obj: Any) -> Any:
    """Make values JSON-stable: fractions to strings, tuples to lists."""
    from fractions import Fraction

    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


@dataclass
class Report:
    command: str
    config: dict
    cases: list[dict] = field(default_factory=list)
    anomalies: list[str] = field(default_factory=list)
    passed: bool = True
    timing_seconds: float = 0.0

    def add_case(self, **fields) -> None:
        self.cases.append(_canonical(fields))
        if fields.get("passed") is False:
            self.passed = False

    def add_anomaly(self, message: str) -> None:
        self.anomalies.append(message)

    def digest(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": _canonical(self.config),
            "cases": self.cases,
            "anomalies": self.anomalies,
            "passed": self.passed,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": _canonical(self.config),
            "cases": self.cases,
            "passed": self.passed,
            "anomalies": self.anomalies,
            "timing_seconds": round(self.timing_seconds, 6),
            "digest": self.digest(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        """Flatten the case records into a CSV table (sorted column union)."""
        columns: list[str] = []
        for case in self.cases:
            for key in case:
                if key not in columns:
                    columns.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=sorted(columns))
        writer.writeheader()
        for case in self.cases:
            writer.writerow({k: _flat(v) for k, v in case.items()})
        return buf.getvalue()


def _flat(v: Any) -> Any:
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return v


def merge_reports(reports: list[dict]) -> dict:
    """Deterministic merge of serialized reports, keyed by command then
    digest; configs are kept per part."""
    parts = sorted(reports, key=lambda r: (r.get("command", ""), r.get("digest", "")))
    merged = Report(
        command="report-merge",
        config={"parts": [r.get("digest", "") for r in parts]},
    )
    for r in parts:
        merged.cases.extend(r.get("cases", []))
        merged.anomalies.extend(r.get("anomalies", []))
        if not r.get("passed", True):
            merged.passed = False
        merged.timing_seconds += r.get("timing_seconds", 0.0)
    return merged.to_json()
