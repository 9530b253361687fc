"""Minimal self-contained SVG plots: one polyline with error bars, one bar chart.

Output is a complete SVG document with fixed-precision coordinates and no
timestamps, so identical inputs produce identical bytes.
"""

from __future__ import annotations

from .errors import ContractViolationError

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 24, 48, 56


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(x: float) -> str:
    return f"{x:.4g}"


def _axes(title: str, xlabel: str, ylabel: str,
          xticks: list[tuple[float, str]], yticks: list[tuple[float, str]]) -> list[str]:
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    parts = [
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:.1f}" y="24" text-anchor="middle" '
        f'font-size="15">{title}</text>',
        f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>',
        f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">{ylabel}</text>',
    ]
    for px, label in xticks:
        parts.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{_fmt(px)}" y="{y0 + 20}" text-anchor="middle" font-size="11">{label}</text>'
        )
    for py, label in yticks:
        parts.append(f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end" font-size="11">{label}</text>'
        )
    return parts


def _document(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">\n{body}\n</svg>\n'
    )


def _scales(lo: float, hi: float, pixel_lo: float, pixel_hi: float):
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo

    def to_px(v: float) -> float:
        return pixel_lo + (v - lo) / span * (pixel_hi - pixel_lo)

    return lo, hi, to_px


def line_plot(xs, ys, yerr=None, title: str = "", xlabel: str = "",
              ylabel: str = "") -> str:
    """Polyline through (xs, ys) with optional symmetric error bars."""
    xs, ys = list(map(float, xs)), list(map(float, ys))
    if len(xs) != len(ys) or not xs:
        raise ContractViolationError("need equal-length, nonempty xs and ys")
    errs = [0.0] * len(xs) if yerr is None else list(map(float, yerr))
    if len(errs) != len(xs):
        raise ContractViolationError("yerr length must match xs")
    ylo = min(y - e for y, e in zip(ys, errs))
    yhi = max(y + e for y, e in zip(ys, errs))
    pad = 0.05 * (yhi - ylo or 1.0)
    xlo, xhi, x_px = _scales(min(xs), max(xs), MARGIN_L, WIDTH - MARGIN_R)
    ylo, yhi, y_px = _scales(ylo - pad, yhi + pad, HEIGHT - MARGIN_B, MARGIN_T)
    xticks = [(x_px(v), _tick_label(v)) for v in _tick_values(xlo, xhi)]
    yticks = [(y_px(v), _tick_label(v)) for v in _tick_values(ylo, yhi)]
    parts = _axes(title, xlabel, ylabel, xticks, yticks)
    for x, y, e in zip(xs, ys, errs):
        if e <= 0:
            continue
        px, top, bot = x_px(x), y_px(y + e), y_px(y - e)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(top)}" x2="{_fmt(px)}" '
                     f'y2="{_fmt(bot)}" stroke="steelblue"/>')
        for py in (top, bot):
            parts.append(f'<line x1="{_fmt(px - 4)}" y1="{_fmt(py)}" '
                         f'x2="{_fmt(px + 4)}" y2="{_fmt(py)}" stroke="steelblue"/>')
    points = " ".join(f"{_fmt(x_px(x))},{_fmt(y_px(y))}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{points}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_fmt(x_px(x))}" cy="{_fmt(y_px(y))}" r="3" fill="steelblue"/>')
    return _document(parts)


def bar_chart(edges, counts, title: str = "", xlabel: str = "",
              ylabel: str = "") -> str:
    """Histogram bars for ``counts`` over consecutive ``edges`` intervals."""
    edges, counts = list(map(float, edges)), list(map(float, counts))
    if len(edges) != len(counts) + 1 or not counts:
        raise ContractViolationError("need len(edges) == len(counts) + 1, nonempty")
    xlo, xhi, x_px = _scales(edges[0], edges[-1], MARGIN_L, WIDTH - MARGIN_R)
    ylo, yhi, y_px = _scales(0.0, max(counts) or 1.0, HEIGHT - MARGIN_B, MARGIN_T)
    xticks = [(x_px(v), _tick_label(v)) for v in _tick_values(xlo, xhi)]
    yticks = [(y_px(v), _tick_label(v)) for v in _tick_values(ylo, yhi)]
    parts = _axes(title, xlabel, ylabel, xticks, yticks)
    base = y_px(0.0)
    for i, count in enumerate(counts):
        left, right = x_px(edges[i]), x_px(edges[i + 1])
        top = y_px(count)
        parts.append(
            f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(right - left)}" '
            f'height="{_fmt(base - top)}" fill="steelblue" stroke="white"/>'
        )
    return _document(parts)


def _tick_values(lo: float, hi: float, count: int = 5) -> list[float]:
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]
