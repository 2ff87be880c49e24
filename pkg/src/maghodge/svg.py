"""Tiny self-contained SVG line charts."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 420
ML, MR, MT, MB = 70, 170, 40, 55


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    return np.arange(np.ceil(lo / step) * step, hi + 1e-12 * step, step)


def line_chart(series, title: str = "", xlabel: str = "x", ylabel: str = "y") -> str:
    """series: iterable of (label, xs, ys, colour, dashed)."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(min(0.0, ys.min())), float(ys.max()) * 1.05
    pw, ph = W - ML - MR, H - MT - MB

    def X(x):
        return ML + (x - x0) / (x1 - x0 or 1) * pw

    def Y(y):
        return MT + ph - (y - y0) / (y1 - y0 or 1) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.2f}" y1="{MT + ph}" x2="{X(t):.2f}" y2="{MT + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{X(t):.2f}" y="{MT + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ML - 5}" y1="{Y(t):.2f}" x2="{ML}" y2="{Y(t):.2f}" stroke="#333"/>')
        out.append(f'<text x="{ML - 8}" y="{Y(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ML + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{MT + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MT + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, sx, sy, colour, dashed) in enumerate(series):
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(sx, sy))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline class="series" data-label="{escape(label)}" fill="none" '
                   f'stroke="{colour}" stroke-width="2"{dash} points="{pts}"/>')
        ly = MT + 10 + 20 * i
        out.append(f'<line x1="{W - MR + 12}" y1="{ly}" x2="{W - MR + 40}" y2="{ly}" '
                   f'stroke="{colour}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{W - MR + 46}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
