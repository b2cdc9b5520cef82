"""Alarm reports: JSON serialization and the human-readable listing."""

from __future__ import annotations

import json
from collections import Counter
from importlib import resources

from . import __version__
from .analyzer import AnalysisResult, collect_alarms

SCHEMA_VERSION = "cellscope-alarms/1"
ALARM_KINDS = ("overflow", "div-by-zero", "out-of-bound", "misaligned", "invalid-pointer",
               "null-deref", "cross-base-arith", "uninit-read")


def load_schema() -> dict:
    return json.loads(resources.files("cellscope").joinpath("report_schema.json")
                      .read_text(encoding="utf-8"))


def build_report(result: AnalysisResult, wall_time: float | None = None) -> dict:
    """The AlarmReport of one analysis as plain JSON data."""
    alarms = []
    for a in collect_alarms(result):
        alarms.append({
            "file": a.loc.file,
            "line": a.loc.line,
            "column": a.loc.column,
            "point": a.point,
            "kind": a.kind,
            "expression": a.expr,
            "message": a.message,
        })
    counts = Counter(a["kind"] for a in alarms)
    return {
        "schema": SCHEMA_VERSION,
        "tool": {"name": "cellscope", "version": __version__},
        "abi": result.abi.summary(),
        "complete": result.complete,
        "alarms": alarms,
        "counts": {k: counts[k] for k in sorted(counts)},
        "total": len(alarms),
        "wall_time": None if wall_time is None else round(wall_time, 6),
    }


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def render_human(report: dict, sources: dict | None = None) -> str:
    """Alarms grouped by file then line, each line followed by its source text.

    ``sources`` maps a file name to its text; files not in it get no excerpt.
    """
    sources = sources or {}
    out = []
    n = report["total"]
    out.append(f"{n} alarm" + ("" if n == 1 else "s"))
    if not report["complete"]:
        out.append("warning: iteration cap reached, the result is incomplete")
    cur_file, cur_line = None, None
    for a in report["alarms"]:
        if a["file"] != cur_file:
            cur_file, cur_line = a["file"], None
            out.append(f"{cur_file}:")
        if a["line"] != cur_line:
            cur_line = a["line"]
            lines = sources.get(cur_file, "").splitlines()
            excerpt = lines[cur_line - 1].strip() if 0 < cur_line <= len(lines) else ""
            out.append(f"  line {cur_line}: {excerpt}" if excerpt else f"  line {cur_line}:")
        msg = f" ({a['message']})" if a["message"] else ""
        out.append(f"    {a['line']}:{a['column']} {a['kind']} at point {a['point']}: "
                   f"{a['expression']}{msg}")
    if report["counts"]:
        out.append("counts: " + ", ".join(f"{k}={v}" for k, v in report["counts"].items()))
    return "\n".join(out) + "\n"
