"""Static SVG line charts with shaded confidence bands."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def line_chart(series: dict, path, title: str = "", xlabel: str = "iteration", ylabel: str = "",
               hline: float | None = None, width: int = 640, height: int = 400) -> None:
    """``series`` maps a label to ``(x, mean, ci)`` arrays; ``hline`` draws a dashed reference."""
    left, right, top, bottom = 70, 150, 36, 50
    pw, ph = width - left - right, height - top - bottom
    xs = [np.asarray(s[0], dtype=float) for s in series.values()]
    lows = [np.asarray(s[1], dtype=float) - np.asarray(s[2], dtype=float) for s in series.values()]
    highs = [np.asarray(s[1], dtype=float) + np.asarray(s[2], dtype=float) for s in series.values()]
    allx = np.concatenate(xs) if xs else np.zeros(1)
    ally = np.concatenate(lows + highs + ([np.array([hline])] if hline is not None else []))
    ally = ally[np.isfinite(ally)] if ally.size else np.zeros(1)
    if ally.size == 0:
        ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (np.asarray(x, dtype=float) - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - np.asarray(y, dtype=float)) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{left}" x2="{left + pw}" y1="{y:.1f}" y2="{y:.1f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    for t in _ticks(x0, x1):
        x = px(t)
        out.append(f'<text x="{x:.1f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{top + ph / 2:.1f}) rotate(-90)" text-anchor="middle">'
               f'{escape(ylabel)}</text>')
    if hline is not None:
        y = py(hline)
        out.append(f'<line x1="{left}" x2="{left + pw}" y1="{y:.1f}" y2="{y:.1f}" stroke="#000" '
                   f'stroke-dasharray="6,4"/>')
    for i, (label, (x, mean, ci)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        x, mean, ci = (np.asarray(v, dtype=float) for v in (x, mean, ci))
        if x.size == 0:
            continue
        upper = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px(x), py(mean + ci)))
        lower = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px(x[::-1]), py((mean - ci)[::-1])))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px(x), py(mean)))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" x2="{left + pw + 30}" y1="{ly - 4}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(out) + "\n")
