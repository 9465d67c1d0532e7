"""Deterministic CSV/JSON/SVG artifact writers.

All floats are formatted with repr-accuracy so identical runs produce
byte-identical files; the SVG is self-contained (pure markup, no renderer).
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if v != v:
        return "nan"
    return repr(v)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: str, data) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_sanitize(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, n)
    return [float(v) for v in raw]


def line_plot_svg(
    path: str,
    x: np.ndarray,
    series: list[tuple[str, np.ndarray]],
    title: str,
    xlabel: str,
    ylabel: str,
    hlines: list[tuple[str, float]] | None = None,
    logy: bool = False,
) -> None:
    """Minimal self-contained polyline plot with axes, ticks and legend."""
    W, H = 640, 420
    ml, mr, mt, mb = 64, 16, 34, 44
    pw, ph = W - ml - mr, H - mt - mb
    x = np.asarray(x, dtype=float)

    ys = []
    for _, v in series:
        v = np.asarray(v, dtype=float)
        if logy:
            v = np.where(v > 0, v, np.nan)
            v = np.log10(v)
        ys.append(v)
    allv = np.concatenate([v[np.isfinite(v)] for v in ys]) if ys else np.array([0.0])
    if hlines and not logy:
        allv = np.concatenate([allv, [h for _, h in hlines]])
    if allv.size == 0:
        allv = np.array([0.0, 1.0])
    ylo, yhi = float(np.min(allv)), float(np.max(allv))
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    xlo, xhi = float(np.min(x)), float(np.max(x))
    if xhi - xlo < 1e-12:
        xhi = xlo + 1.0

    def px(v):
        return ml + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return mt + (yhi - v) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for tv in _ticks(xlo, xhi):
        xp = px(tv)
        parts.append(
            f'<line x1="{xp:.2f}" y1="{mt + ph}" x2="{xp:.2f}" y2="{mt + ph + 4}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{xp:.2f}" y="{mt + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tv:.4g}</text>'
        )
    for tv in _ticks(ylo, yhi):
        yp = py(tv)
        label = f"1e{tv:.2f}" if logy else f"{tv:.4g}"
        parts.append(f'<line x1="{ml - 4}" y1="{yp:.2f}" x2="{ml}" y2="{yp:.2f}" stroke="#444"/>')
        parts.append(
            f'<text x="{ml - 8}" y="{yp + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{H - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {mt + ph / 2:.1f})">{ylabel}</text>'
    )
    if hlines:
        for name, hv in hlines:
            hv2 = np.log10(hv) if logy and hv > 0 else hv
            if ylo <= hv2 <= yhi:
                yp = py(hv2)
                parts.append(
                    f'<line x1="{ml}" y1="{yp:.2f}" x2="{ml + pw}" y2="{yp:.2f}" '
                    f'stroke="#888" stroke-dasharray="6 4"/>'
                )
                parts.append(
                    f'<text x="{ml + pw - 4}" y="{yp - 4:.2f}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="10" fill="#666">{name}</text>'
                )
    for j, ((name, _), v) in enumerate(zip(series, ys)):
        color = _PALETTE[j % len(_PALETTE)]
        pts = [
            f"{px(xi):.2f},{py(vi):.2f}"
            for xi, vi in zip(x, v)
            if np.isfinite(vi)
        ]
        if pts:
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        ly = mt + 14 + 14 * j
        parts.append(
            f'<line x1="{ml + pw - 110}" y1="{ly - 4}" x2="{ml + pw - 90}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{ml + pw - 84}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
