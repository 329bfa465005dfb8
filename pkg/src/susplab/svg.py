"""Minimal deterministic SVG line plots."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
_W, _H = 720, 400
_L, _R, _T, _B = 70, 20, 36, 48


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + step * 1e-9, step))


def _decimate(x, y, max_points):
    if x.size <= max_points:
        return x, y
    # keep min and max of each bucket so peaks survive
    edges = np.linspace(0, x.size, max_points // 2 + 1).astype(int)
    keep = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        seg = y[a:b]
        i, j = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        keep.extend(sorted({i, j}))
    keep = np.array(keep)
    return x[keep], y[keep]


def line_plot(path, x, series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
              max_points: int = 4000) -> Path:
    """Write one or more ``label -> y`` curves over shared ``x`` as an SVG file.

    Non-finite values are dropped. Output is byte-identical for identical input.
    """
    x = np.asarray(x, dtype=float)
    if not series:
        raise ValueError("nothing to plot")
    curves = []
    for label, y in series.items():
        y = np.asarray(y, dtype=float)
        if y.shape != x.shape:
            raise ValueError(f"series {label!r} length {y.size} != x length {x.size}")
        ok = np.isfinite(x) & np.isfinite(y)
        curves.append((str(label), *_decimate(x[ok], y[ok], max_points)))
    xs = np.concatenate([c[1] for c in curves])
    ys = np.concatenate([c[2] for c in curves])
    if xs.size == 0:
        raise ValueError("no finite points to plot")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        pad = abs(y0) * 0.1 or 1.0
        y0, y1 = y0 - pad, y1 + pad
    pw, ph = _W - _L - _R, _H - _T - _B

    def px(v):
        return _L + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _T + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{_T + ph}" x2="{X:.2f}" y2="{_T + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{X:.2f}" y="{_T + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{_L}" y1="{Y:.2f}" x2="{_L + pw}" y2="{Y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{_L - 6}" y="{Y + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    for k, (label, cx, cy) in enumerate(curves):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(cx, cy))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = _T + 14 + 14 * k
        out.append(f'<line x1="{_L + pw - 120}" y1="{ly - 4}" x2="{_L + pw - 100}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_L + pw - 96}" y="{ly}">{escape(label)}</text>')
    if title:
        out.append(f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{_L + pw / 2:.1f}" y="{_H - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{_T + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {_T + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
