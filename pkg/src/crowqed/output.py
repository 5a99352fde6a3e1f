"""Tables and their CSV, JSON and SVG renderings.

Numbers are written with 12 significant digits so that regenerated files
are byte-identical across platforms.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Table", "Series", "format_number", "to_csv", "to_json", "line_plot_svg"]

PRECISION = 12


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0:
            return "0"
        return f"{x:.{PRECISION}g}"
    return str(x)


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{PRECISION}g}") if x != 0 else 0.0
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


@dataclass
class Series:
    x: str
    y: str
    label: str
    dashed: bool = False


@dataclass
class Table:
    """Column-oriented result with an optional plot layout."""

    columns: dict[str, list] = field(default_factory=dict)
    plot: list[Series] = field(default_factory=list)
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    @classmethod
    def from_rows(cls, rows: list[dict], **kwargs) -> "Table":
        names: list[str] = []
        for row in rows:
            for name in row:
                if name not in names:
                    names.append(name)
        return cls({n: [row.get(n, math.nan) for row in rows] for n in names}, **kwargs)

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def rows(self) -> list[dict]:
        names = list(self.columns)
        return [{n: self.columns[n][i] for n in names} for i in range(len(self))]

    def select(self, names) -> "Table":
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise KeyError(", ".join(missing))
        plot = [s for s in self.plot if s.x in names and s.y in names]
        return Table({n: self.columns[n] for n in names}, plot, self.title, self.xlabel, self.ylabel)


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(table.columns))
    for row in table.rows():
        writer.writerow([format_number(v) for v in row.values()])
    return buf.getvalue()


def to_json(table: Table, config: dict, version: str) -> str:
    payload = {
        "config": _json_value(config),
        "results": [_json_value(r) for r in table.rows()],
        "version": version,
    }
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


_PALETTE = ("#1f4e9c", "#b8312f", "#2a8a3e", "#7d3c98", "#c77c0e", "#17808a")


def line_plot_svg(table: Table, width: int = 640, height: int = 420) -> str:
    """Render ``table.plot`` as a standalone SVG line chart."""
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom
    xs, ys = [], []
    for s in table.plot:
        x = np.asarray(table.columns[s.x], dtype=float)
        y = np.asarray(table.columns[s.y], dtype=float)
        good = np.isfinite(x) & np.isfinite(y)
        xs.append(x[good])
        ys.append(y[good])
    allx = np.concatenate(xs) if xs else np.array([0.0, 1.0])
    ally = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - y) / (y1 - y0) * ph

    f = lambda v: f"{v:.2f}"  # noqa: E731
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{f(px(t))}" y1="{top + ph}" x2="{f(px(t))}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{f(px(t))}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{f(py(t))}" x2="{left}" y2="{f(py(t))}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{f(py(t) + 4)}" text-anchor="end">{t:g}</text>')
    if y0 < 0 < y1:
        out.append(
            f'<line x1="{left}" y1="{f(py(0))}" x2="{left + pw}" y2="{f(py(0))}" stroke="#999" stroke-width="0.5"/>'
        )
    for i, (s, x, y) in enumerate(zip(table.plot, xs, ys)):
        colour = _PALETTE[i % len(_PALETTE)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        pts = " ".join(f"{f(px(a))},{f(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.6"{dash} points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(
            f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 40}" y2="{ly}" '
            f'stroke="{colour}" stroke-width="1.6"{dash}/>'
        )
        out.append(f'<text x="{left + pw + 46}" y="{ly + 4}">{_escape(s.label)}</text>')
    if table.title:
        out.append(f'<text x="{left + pw / 2}" y="{top - 14}" text-anchor="middle" font-size="14">{_escape(table.title)}</text>')
    if table.xlabel:
        out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{_escape(table.xlabel)}</text>')
    if table.ylabel:
        out.append(
            f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {top + ph / 2})">{_escape(table.ylabel)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
