"""JSON and CSV reports of a suite run.

The JSON report is deterministic: for identical inputs it differs between
runs only in ``generated_at``.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from pathlib import Path

from .runner import STEADY_METRICS, STEP_METRICS, Verdict
from .suite import SuiteCounts

REPORT_SCHEMA = "pmulab-report/1"

_UNITS = {"tve": "%", "fe": "Hz", "rfe": "Hz/s", "overshoot": "fraction of step", "delay": "s",
          "response_tve": "s", "response_fe": "s", "response_rfe": "s"}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _limit_key(test_class: str, metric: str) -> tuple[str, str]:
    return test_class, f"{metric}_max"


def build_report(verdicts: list[Verdict], counts: SuiteCounts, config: dict, limits,
                 generated_at: str | None = None) -> dict:
    """Assemble the report document. ``limits`` is a :class:`LimitTable`."""
    results = []
    for v in verdicts:
        metrics = {}
        for m, status in v.status.items():
            cls, key = _limit_key(v.test_class, m)
            entry = limits[cls].get(key)
            metrics[m] = {
                "measured": _num(v.measured.get(m)),
                "limit": _num(v.limits.get(m)),
                "unit": _UNITS[m],
                "status": status,
                "provenance": entry.provenance if entry else None,
            }
        results.append({
            "id": v.test_id,
            "class": v.test_class,
            "pass": v.passed,
            "metrics": metrics,
            "saturation_count": v.saturation,
            "adc_clipped": v.clipped,
            **({"extra": {k: _num(x) for k, x in v.extra.items()}} if v.extra else {}),
        })
    failing = [v.test_id for v in verdicts if not v.passed]
    per_class = {}
    for v in verdicts:
        pc = per_class.setdefault(v.test_class, {"run": 0, "passed": 0})
        pc["run"] += 1
        pc["passed"] += int(v.passed)
    return {
        "schema": REPORT_SCHEMA,
        "generated_at": generated_at or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "overall": "pass" if not failing else "fail",
        "config": config,
        "suite": counts.to_dict(),
        "summary": {"run": len(verdicts), "passed": len(verdicts) - len(failing),
                    "failed": len(failing), "failing_ids": failing, "per_class": per_class},
        "limits": limits.to_dict(),
        "results": results,
    }


def write_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")


CSV_COLUMNS = ("id", "class", "pass") + STEADY_METRICS + STEP_METRICS + ("saturation_count",)


def write_csv(verdicts: list[Verdict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for v in verdicts:
            row = [v.test_id, v.test_class, "pass" if v.passed else "fail"]
            for m in STEADY_METRICS + STEP_METRICS:
                x = v.measured.get(m)
                row.append("" if x is None else repr(float(x)))
            row.append(v.saturation)
            w.writerow(row)
