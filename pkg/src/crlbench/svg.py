"""Hand-emitted SVG line and bar charts; no plotting dependency."""

from __future__ import annotations

from pathlib import Path

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return out_lo + (np.asarray(vals, dtype=np.float64) - lo) / span * (out_hi - out_lo)


def _axes(title: str, xlabel: str, ylabel: str, xlo, xhi, ylo, yhi) -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{_ML}" y1="{_H-_MB}" x2="{_W-_MR}" y2="{_H-_MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H-_MB}" stroke="black"/>',
        f'<text x="{_W/2}" y="{_H-12}" text-anchor="middle">{xlabel}</text>',
        f'<text x="16" y="{_H/2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_H/2})">{ylabel}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = xlo + frac * (xhi - xlo)
        yv = ylo + frac * (yhi - ylo)
        xp = _ML + frac * (_W - _ML - _MR)
        yp = _H - _MB - frac * (_H - _MT - _MB)
        parts.append(f'<text x="{xp:.1f}" y="{_H-_MB+16}" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{_ML-6}" y="{yp+4:.1f}" text-anchor="end">{yv:.3g}</text>')
    return parts


def line_chart(series: dict, path, title: str = "", xlabel: str = "step",
               ylabel: str = "value"):
    """series: name -> (xs, ys) or (xs, ys, ci_halfwidths); CI bands are drawn
    as translucent polygons."""
    all_x = np.concatenate([np.asarray(s[0], dtype=np.float64) for s in series.values()])
    ys_list, his = [], []
    for s in series.values():
        y = np.asarray(s[1], dtype=np.float64)
        ci = np.asarray(s[2], dtype=np.float64) if len(s) > 2 and s[2] is not None else 0.0
        ys_list.append(y - ci)
        his.append(y + ci)
    all_y = np.concatenate(ys_list + his)
    xlo, xhi = float(all_x.min()), float(all_x.max())
    ylo, yhi = float(all_y.min()), float(all_y.max())
    if ylo == yhi:
        ylo, yhi = ylo - 1, yhi + 1

    parts = _axes(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    for i, (name, s) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        xs = np.asarray(s[0], dtype=np.float64)
        ys = np.asarray(s[1], dtype=np.float64)
        px = _scale(xs, xlo, xhi, _ML, _W - _MR)
        py = _scale(ys, ylo, yhi, _H - _MB, _MT)
        if len(s) > 2 and s[2] is not None:
            ci = np.asarray(s[2], dtype=np.float64)
            up = _scale(ys + ci, ylo, yhi, _H - _MB, _MT)
            dn = _scale(ys - ci, ylo, yhi, _H - _MB, _MT)
            band = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(px, up))
            band += " " + " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(px[::-1], dn[::-1]))
            parts.append(f'<polygon points="{band}" fill="{color}" opacity="0.15"/>')
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(px, py))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<rect x="{_W-_MR-150}" y="{_MT+4+i*16}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{_W-_MR-135}" y="{_MT+13+i*16}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def bar_chart(labels, values, path, errors=None, title: str = "", ylabel: str = "value"):
    values = np.asarray(values, dtype=np.float64)
    errs = np.zeros_like(values) if errors is None else np.asarray(errors, dtype=np.float64)
    ylo = min(0.0, float((values - errs).min()))
    yhi = float((values + errs).max())
    if yhi == ylo:
        yhi = ylo + 1
    parts = _axes(title, "", ylabel, 0, len(labels), ylo, yhi)
    span = (_W - _ML - _MR) / max(len(labels), 1)
    for i, (label, v, e) in enumerate(zip(labels, values, errs)):
        color = _COLORS[i % len(_COLORS)]
        x = _ML + i * span + span * 0.15
        y0 = _scale([0.0], ylo, yhi, _H - _MB, _MT)[0]
        y1 = _scale([v], ylo, yhi, _H - _MB, _MT)[0]
        top, bot = min(y0, y1), max(y0, y1)
        parts.append(f'<rect x="{x:.1f}" y="{top:.1f}" width="{span*0.7:.1f}" '
                     f'height="{bot-top:.1f}" fill="{color}" opacity="0.8"/>')
        if e > 0:
            cx = x + span * 0.35
            ey0 = _scale([v - e], ylo, yhi, _H - _MB, _MT)[0]
            ey1 = _scale([v + e], ylo, yhi, _H - _MB, _MT)[0]
            parts.append(f'<line x1="{cx:.1f}" y1="{ey0:.1f}" x2="{cx:.1f}" y2="{ey1:.1f}" '
                         f'stroke="black"/>')
        parts.append(f'<text x="{x+span*0.35:.1f}" y="{_H-_MB+16}" '
                     f'text-anchor="middle">{label}</text>')
        parts.append(f'<text x="{x+span*0.35:.1f}" y="{top-4:.1f}" '
                     f'text-anchor="middle">{v:.3g}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
