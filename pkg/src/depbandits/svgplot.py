"""Static SVG emission for aggregate regret curves.

No plotting dependency: the figures are batch artifacts, so the markup
is assembled directly with fixed-precision coordinates. Identical input
rows always produce identical bytes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import DataError

WIDTH = 720
HEIGHT = 480
MARGIN_L = 72
MARGIN_R = 24
MARGIN_T = 24
MARGIN_B = 56

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

AGGREGATE_HEADER = ["policy", "t", "mean", "sd", "ci95"]


@dataclass(frozen=True)
class SeriesPoint:
    t: float
    mean: float
    ci95: float


def read_aggregate_csv(path) -> dict[str, list[SeriesPoint]]:
    """Parse an aggregate CSV into per-policy point lists.

    Raises DataError naming the offending row (1-based, header = row 1)
    on any malformed content.
    """
    series: dict[str, list[SeriesPoint]] = {}
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected header "
                            f"{','.join(AGGREGATE_HEADER)}") from None
        if header != AGGREGATE_HEADER:
            raise DataError(
                f"{path}: row 1: bad header {header!r}, expected {AGGREGATE_HEADER}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataError(f"{path}: row {lineno}: expected 5 fields, got {len(row)}")
            policy = row[0]
            try:
                t = float(row[1])
                mean = float(row[2])
                float(row[3])
                ci = float(row[4])
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
            if not policy:
                raise DataError(f"{path}: row {lineno}: empty policy name")
            series.setdefault(policy, []).append(SeriesPoint(t, mean, ci))
    if not series:
        raise DataError(f"{path}: no data rows")
    return series


def _fmt(x: float) -> str:
    return format(x, ".2f")


def _nice_ticks(hi: float, n: int = 5) -> list[float]:
    """Round tick positions covering [0, hi]."""
    if hi <= 0:
        return [0.0, 1.0]
    raw = hi / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    ticks = []
    v = 0.0
    while v < hi + 0.5 * step:
        ticks.append(v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return format(v, "g")


def render_aggregate_svg(series: dict[str, list[SeriesPoint]],
                         title: str = "") -> str:
    """Mean regret vs t with shaded 95% CI bands, one series per policy."""
    for name, pts in series.items():
        if not pts:
            raise DataError(f"series {name!r} has no points")
    order = list(series)
    x_max = max(p.t for pts in series.values() for p in pts)
    y_max = max(p.mean + p.ci95 for pts in series.values() for p in pts)
    if x_max <= 0:
        x_max = 1.0
    if y_max <= 0:
        y_max = 1.0
    x_ticks = _nice_ticks(x_max)
    y_ticks = _nice_ticks(y_max)
    x_max = max(x_max, x_ticks[-1])
    y_max = max(y_max, y_ticks[-1])

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(t: float) -> float:
        return MARGIN_L + plot_w * (t / x_max)

    def sy(v: float) -> float:
        return MARGIN_T + plot_h * (1.0 - v / y_max)

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')

    # axes
    x0, y0 = _fmt(MARGIN_L), _fmt(HEIGHT - MARGIN_B)
    x1 = _fmt(WIDTH - MARGIN_R)
    y1 = _fmt(MARGIN_T)
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" '
               'stroke="black" stroke-width="1"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" '
               'stroke="black" stroke-width="1"/>')
    for v in x_ticks:
        px = _fmt(sx(v))
        out.append(f'<line x1="{px}" y1="{y0}" x2="{px}" '
                   f'y2="{_fmt(HEIGHT - MARGIN_B + 5)}" stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{px}" y="{_fmt(HEIGHT - MARGIN_B + 20)}" '
                   f'font-family="sans-serif" font-size="12" text-anchor="middle">'
                   f'{_tick_label(v)}</text>')
    for v in y_ticks:
        py = _fmt(sy(v))
        out.append(f'<line x1="{_fmt(MARGIN_L - 5)}" y1="{py}" x2="{x0}" '
                   f'y2="{py}" stroke="black" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(MARGIN_L - 9)}" y="{py}" '
                   f'font-family="sans-serif" font-size="12" text-anchor="end" '
                   f'dominant-baseline="middle">{_tick_label(v)}</text>')
    out.append(f'<text x="{_fmt(MARGIN_L + plot_w / 2)}" y="{_fmt(HEIGHT - 12)}" '
               'font-family="sans-serif" font-size="14" text-anchor="middle">'
               'round t</text>')
    out.append(f'<text x="16" y="{_fmt(MARGIN_T + plot_h / 2)}" '
               'font-family="sans-serif" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 16 {_fmt(MARGIN_T + plot_h / 2)})">'
               'mean pseudo-regret</text>')
    if title:
        out.append(f'<text x="{_fmt(MARGIN_L + plot_w / 2)}" y="16" '
                   'font-family="sans-serif" font-size="14" text-anchor="middle">'
                   f'{title}</text>')

    # CI bands first so the lines draw on top
    for k, name in enumerate(order):
        pts = series[name]
        color = PALETTE[k % len(PALETTE)]
        upper = [(sx(p.t), sy(p.mean + p.ci95)) for p in pts]
        lower = [(sx(p.t), sy(max(0.0, p.mean - p.ci95))) for p in reversed(pts)]
        path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in upper + lower)
        out.append(f'<polygon points="{path}" fill="{color}" fill-opacity="0.15" '
                   'stroke="none"/>')
    for k, name in enumerate(order):
        pts = series[name]
        color = PALETTE[k % len(PALETTE)]
        path = " ".join(f"{_fmt(sx(p.t))},{_fmt(sy(p.mean))}" for p in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')

    # legend, top-left corner of the plot area
    for k, name in enumerate(order):
        color = PALETTE[k % len(PALETTE)]
        ly = MARGIN_T + 14 + 18 * k
        out.append(f'<line x1="{_fmt(MARGIN_L + 10)}" y1="{_fmt(ly)}" '
                   f'x2="{_fmt(MARGIN_L + 34)}" y2="{_fmt(ly)}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_fmt(MARGIN_L + 40)}" y="{_fmt(ly + 4)}" '
                   f'font-family="sans-serif" font-size="12">{name}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(csv_path, svg_path, title: str = "") -> None:
    series = read_aggregate_csv(csv_path)
    markup = render_aggregate_svg(series, title)
    with open(svg_path, "w", newline="\n") as fh:
        fh.write(markup)
