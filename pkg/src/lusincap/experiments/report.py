"""Deterministic report files."""

from __future__ import annotations

import csv
import io
import json
import os

from .scenarios import RunReport


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, dict)):
        return json.dumps(x, sort_keys=True)
    return str(x)


def render_json(report: RunReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields: list[str] = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(row.get(k)) for k in fields])
    return buf.getvalue()


def write_report(report: RunReport, out_dir: str, fmt: str = "json") -> list[str]:
    """Write the report under ``out_dir`` and return the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, report.kind)
    if fmt == "json":
        paths = {stem + ".json": render_json(report)}
    elif fmt == "csv":
        checks = [a.to_json() for a in report.assertions]
        paths = {stem + ".csv": render_csv(report.rows),
                 stem + ".assertions.csv": render_csv(checks)}
    else:
        raise ValueError(f"unknown format {fmt!r}")
    for path, text in paths.items():
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return list(paths)
