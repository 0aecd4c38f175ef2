"""CSV and SVG writers; every file is written atomically."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

REFERENCE_SLOPES = (0.5, 2.0 / 3.0, 1.0)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def write_atomic(path, text: str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x) -> str:
    return f"{float(x):.16e}"


def probe_to_csv(report) -> str:
    """One row per sampled point of every family: ``family,n,gap_in,gap_out,verdict``."""
    if report.kind == "stable_solvability":
        head = "family,n,input_gap,output_gap,verdict"
    else:
        head = "family,n,image_gap,preimage_gap,verdict"
    lines = [head]
    for name, fam in report.families.items():
        for n, a, b in fam.rows:
            lines.append(f"{name},{n},{fmt(a)},{fmt(b)},{fam.verdict}")
    return "\n".join(lines) + "\n"


def verdict_text(**items) -> str:
    """``key: value`` lines in the given order."""
    return "".join(f"{k}: {v}\n" for k, v in items.items())


def error_record(exc: BaseException) -> str:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("key", "line", "condition", "residual"):
        val = getattr(exc, attr, None)
        if isinstance(val, (int, float, str)):
            rec[attr] = val if not (isinstance(val, float) and not math.isfinite(val)) else str(val)
    return json.dumps(rec, indent=2, sort_keys=True) + "\n"


def _tick_exponents(lo: float, hi: float) -> range:
    return range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)


def loglog_svg(curves: Sequence[tuple], title: str = "", ref_slopes=REFERENCE_SLOPES,
               width: int = 640, height: int = 480) -> str:
    """Static SVG 1.1 log-log plot.

    ``curves`` holds ``(label, x, y)`` triples; nonpositive values are
    skipped. Dashed guide lines of slope ``ref_slopes`` pass through the
    first point of the first curve.
    """
    pts = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in curves]
    pts = [(lab, x[(x > 0) & (y > 0)], y[(x > 0) & (y > 0)]) for lab, x, y in pts]
    pts = [c for c in pts if c[1].size]
    ml, mr, mt, mb = 70, 150, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
    ]
    if not pts:
        out.append("</svg>")
        return "\n".join(out) + "\n"
    xs = np.concatenate([c[1] for c in pts])
    ys = np.concatenate([c[2] for c in pts])
    ex = _tick_exponents(xs.min(), xs.max())
    ey = _tick_exponents(ys.min(), ys.max())
    lx0, lx1 = ex[0], max(ex[-1], ex[0] + 1)
    ly0, ly1 = ey[0], max(ey[-1], ey[0] + 1)

    def px(x):
        return ml + (math.log10(x) - lx0) / (lx1 - lx0) * pw

    def py(y):
        return mt + ph - (math.log10(y) - ly0) / (ly1 - ly0) * ph

    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for e in range(lx0, lx1 + 1):
        x = px(10.0 ** e)
        out.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 20}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">1e{e}</text>')
    for e in range(ly0, ly1 + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{ml - 5}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">1e{e}</text>')
    out.append(f'<clipPath id="plot"><rect x="{ml}" y="{mt}" width="{pw}" height="{ph}"/></clipPath>')

    legend = []
    x0, y0 = pts[0][1][0], pts[0][2][0]
    xa, xb = 10.0 ** lx0, 10.0 ** lx1
    for s in ref_slopes:
        ya, yb = y0 * (xa / x0) ** s, y0 * (xb / x0) ** s
        out.append(f'<line x1="{px(xa):.2f}" y1="{py(ya):.2f}" x2="{px(xb):.2f}" y2="{py(yb):.2f}" '
                   f'stroke="gray" stroke-dasharray="4,3" clip-path="url(#plot)"/>')
        legend.append((f"slope {s:.3g}", "gray", True))
    for i, (lab, x, y) in enumerate(pts):
        color = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for a, b in zip(x, y):
            out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
        legend.append((lab, color, False))
    for i, (lab, color, dashed) in enumerate(legend):
        ly = mt + 12 + 18 * i
        dash = ' stroke-dasharray="4,3"' if dashed else ""
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 35}" y2="{ly}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{ml + pw + 40}" y="{ly + 4}" font-family="sans-serif" font-size="11">{lab}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
