"""Deterministic CSV and JSON output.

CSV files carry the run configuration as leading '#' comment lines, then
an RFC-4180 body with a header row; floats are printed with 17
significant digits so 64-bit values round-trip exactly and reruns are
byte-identical.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

__all__ = ["format_float", "render_csv", "render_report_json", "write_text"]


def format_float(x: float) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def render_csv(columns: Mapping[str, Sequence], meta: Mapping[str, Any]) -> str:
    """Columnar data as CSV text with a '#' metadata preamble."""
    names = list(columns.keys())
    lengths = {len(v) for v in columns.values()}
    if len(lengths) != 1:
        raise ValueError("all columns must have the same length")
    lines = [f"# {k}={_meta_str(v)}" for k, v in sorted(meta.items())]
    lines.append(",".join(names))
    cols = [list(columns[n]) for n in names]
    for row in zip(*cols):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _meta_str(v: Any) -> str:
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def render_report_json(reports: list[dict], config: Mapping[str, Any]) -> str:
    """Canonical (sorted-key) JSON for one run's reports."""
    doc = {
        "config": dict(config),
        "reports": reports,
        "passed": all(r.get("verdict", False) for r in reports),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)
