"""CSV / JSON / SVG emission for experiment sweeps.

CSV files start with a `# schema: <name>` comment line; readers skip comments.
SVG charts are simple hand-rolled polyline plots (no plotting dependency).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path


def write_csv(path, schema: str, fieldnames: list, rows: list) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_csv(path) -> list:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def svg_line_chart(path, series: dict, title: str = "", xlabel: str = "",
                   ylabel: str = "", loglog: bool = False,
                   width: int = 640, height: int = 480) -> None:
    """series: label -> (xs, ys). Writes a standalone SVG polyline chart."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def tx(v):
        return math.log10(v) if loglog else v

    xs_all = [tx(x) for xs, _ in series.values() for x in xs]
    ys_all = [tx(y) for _, ys in series.values() for y in ys if not (loglog and y <= 0)]
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    mleft, mright, mtop, mbot = 70, 20, 40, 50
    pw, ph = width - mleft - mright, height - mtop - mbot

    def px(v):
        return mleft + (tx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return mtop + ph - (tx(v) - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{mleft}" y="{mtop}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width/2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width/2}" y="{height-10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="15" y="{height/2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {height/2})">{ylabel}</text>',
    ]
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys)
                       if not (loglog and (x <= 0 or y <= 0)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            if loglog and (x <= 0 or y <= 0):
                continue
            parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{width - mright - 150}" y="{mtop + 18 + 16*i}" '
                     f'font-size="12" fill="{color}">{label}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))
