"""Deterministic experiment reports: per-replica CSV, aggregate JSON, SVG plots.

Every output byte is a function of the report contents: floats print with 17
significant digits, JSON keys are sorted, and the SVG writer is a minimal
built-in (polyline + axes) with no plotting dependency.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ExperimentReport", "emit_report", "write_svg_plot"]


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


@dataclass
class ExperimentReport:
    preset: str
    per_replica: list = field(default_factory=list)   # list of flat dicts
    aggregates: dict = field(default_factory=dict)
    passed: bool = False
    provenance: dict = field(default_factory=dict)
    plots: list = field(default_factory=list)  # (name, xlabel, ylabel, series, loglog)


def emit_report(report: ExperimentReport, out_dir, formats=("csv", "json", "svg")) -> list:
    """Write the report under out_dir; returns the paths written.

    Same report twice gives byte-identical files.  Refuses to write anything
    for an empty replica list.
    """
    if not report.per_replica:
        raise ValueError("report has no replica records; nothing to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / f"{report.preset}_replicas.csv"
        cols = sorted({k for row in report.per_replica for k in row})
        lines = [",".join(cols)]
        for row in report.per_replica:
            lines.append(",".join(_fmt(row.get(c, "")) for c in cols))
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if "json" in formats:
        path = out / f"{report.preset}_summary.json"
        payload = {
            "preset": report.preset,
            "aggregates": report.aggregates,
            "passed": report.passed,
            "provenance": report.provenance,
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        written.append(path)
    if "svg" in formats:
        for name, xlabel, ylabel, series, loglog in report.plots:
            path = out / f"{report.preset}_{name}.svg"
            write_svg_plot(path, series, title=name, xlabel=xlabel,
                           ylabel=ylabel, loglog=loglog)
            written.append(path)
    return written


def write_svg_plot(path, series, *, title="", xlabel="", ylabel="",
                   loglog=False, width=640, height=480) -> None:
    """Plot named (x, y) series as polylines with plain axes."""
    margin = 60.0
    pts_all = [(x, y) for _, pts in series for x, y in pts]
    if not pts_all:
        raise ValueError("nothing to plot")

    def tx(v):
        return math.log10(v) if loglog else v

    xs = [tx(x) for x, _ in pts_all]
    ys = [tx(y) for _, y in pts_all]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xspan = (x1 - x0) or 1.0
    yspan = (y1 - y0) or 1.0

    def to_px(x, y):
        px = margin + (tx(x) - x0) / xspan * (width - 2 * margin)
        py = height - margin - (tx(y) - y0) / yspan * (height - 2 * margin)
        return px, py

    colors = ["#1f6fb2", "#b2421f", "#3a8f3a", "#7a3ab2", "#b29a1f"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{height / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {height / 2})">{ylabel}</text>',
    ]
    for i, (name, pts) in enumerate(series):
        color = colors[i % len(colors)]
        coords = " ".join("%.2f,%.2f" % to_px(x, y) for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}"/>')
        for x, y in pts:
            px, py = to_px(x, y)
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{width - margin + 5}" y="{margin + 16 * i}" '
                     f'fill="{color}" font-size="12">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
