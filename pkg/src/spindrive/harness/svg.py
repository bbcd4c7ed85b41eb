"""Hand-assembled SVG line charts.

CSV is the canonical artifact; these charts are a convenience view written
without any plotting dependency.  All coordinates are formatted with fixed
precision so identical inputs produce identical bytes.
"""
from __future__ import annotations

import math
from pathlib import Path

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 150, 34, 46


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / (n - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1.0, 2.0, 2.5, 5.0, 10.0) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return out


def _tick_label(value: float, log: bool) -> str:
    return f"{10.0 ** value:.3g}" if log else f"{value:g}"


def line_chart(
    path,
    series,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    vline: float | None = None,
    width: int = 720,
    height: int = 420,
    log_y: bool = False,
) -> Path:
    """series: iterable of (label, x values, y values); returns the path.

    log_y plots log10 of the values; non-positive points are dropped from
    the transformed series (and from the axis range).
    """
    path = Path(path)
    prepared = []
    for label, xs, ys in series:
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)]
        if log_y:
            pts = [(x, math.log10(y)) for x, y in pts if y > 0.0]
        pts = [(x, y) for x, y in pts if math.isfinite(x) and math.isfinite(y)]
        if pts:
            prepared.append((label, pts))

    if prepared:
        x_lo = min(p[0] for _, pts in prepared for p in pts)
        x_hi = max(p[0] for _, pts in prepared for p in pts)
        y_lo = min(p[1] for _, pts in prepared for p in pts)
        y_hi = max(p[1] for _, pts in prepared for p in pts)
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0
    if vline is not None:
        x_lo, x_hi = min(x_lo, vline), max(x_hi, vline)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + plot_w * (x - x_lo) / (x_hi - x_lo)

    def py(y: float) -> float:
        return _MARGIN_T + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#222222"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width // 2}" y="20" text-anchor="middle" '
            f'font-size="14">{_escape(title)}</text>'
        )

    for t in _ticks(x_lo, x_hi):
        x = px(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_MARGIN_T + plot_h}" x2="{_fmt(x)}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#222222"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_MARGIN_T + plot_h + 18}" '
            f'text-anchor="middle">{_tick_label(t, False)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{_fmt(y)}" x2="{_MARGIN_L}" '
            f'y2="{_fmt(y)}" stroke="#222222"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{_fmt(y + 4)}" '
            f'text-anchor="end">{_tick_label(t, log_y)}</text>'
        )
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(y)}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{_fmt(y)}" stroke="#dddddd"/>'
        )
    if x_label:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w // 2}" y="{height - 10}" '
            f'text-anchor="middle">{_escape(x_label)}</text>'
        )
    if y_label:
        cx, cy = 16, _MARGIN_T + plot_h // 2
        parts.append(
            f'<text x="{cx}" y="{cy}" text-anchor="middle" '
            f'transform="rotate(-90 {cx} {cy})">{_escape(y_label)}</text>'
        )
    if vline is not None:
        x = px(vline)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_MARGIN_T}" x2="{_fmt(x)}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="#888888" stroke-dasharray="5,4"/>'
        )

    for k, (label, pts) in enumerate(prepared):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        ly = _MARGIN_T + 14 + 18 * k
        lx = _MARGIN_L + plot_w + 12
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{lx + 28}" y="{ly}">{_escape(str(label))}</text>')

    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path
