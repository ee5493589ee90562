"""Static SVG pictures of diagrams: one color per slope class."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence
from xml.sax.saxutils import escape

from .scattering import ScatteringDiagram, Wall, intersection

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")


def slope_label(m) -> str:
    if m[0] == 0:
        return "vertical"
    s = Fraction(m[1], m[0])
    return f"slope {s.numerator}" if s.denominator == 1 else f"slope {s.numerator}/{s.denominator}"


def _bounds(walls: Sequence[Wall]) -> tuple[float, float, float, float]:
    pts = [w.base for w in walls]
    for i, a in enumerate(walls):
        for b in walls[i + 1:]:
            p = intersection(a, b)
            if p is not None:
                pts.append(p)
    xs = [float(p[0]) for p in pts] or [0.0]
    ys = [float(p[1]) for p in pts] or [0.0]
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    pad = max(hi_x - lo_x, hi_y - lo_y, 2.0) * 0.6
    return lo_x - pad, hi_x + pad, lo_y - pad, hi_y + pad


def _clip(base, d, box, both: bool) -> tuple[tuple[float, float], tuple[float, float]]:
    """Segment of ``base + s d`` inside ``box`` (``s >= 0`` unless ``both``)."""
    x0, x1, y0, y1 = box
    bx, by = float(base[0]), float(base[1])
    lo, hi = (-1e18 if both else 0.0), 1e18
    for p, q, a, b in ((bx, d[0], x0, x1), (by, d[1], y0, y1)):
        if q == 0:
            continue
        s1, s2 = (a - p) / q, (b - p) / q
        lo, hi = max(lo, min(s1, s2)), min(hi, max(s1, s2))
    hi = max(hi, lo)
    return (bx + lo * d[0], by + lo * d[1]), (bx + hi * d[0], by + hi * d[1])


def render_svg(d: ScatteringDiagram, size: int = 480, title: str = "") -> str:
    walls = [w for w in d.walls if w.log]
    box = _bounds(walls)
    x0, x1, y0, y1 = box
    scale = size / max(x1 - x0, y1 - y0)

    def px(p):
        return (round((p[0] - x0) * scale, 2), round((y1 - p[1]) * scale, 2))

    classes: dict = {}
    for w in walls:
        classes.setdefault(w.m, PALETTE[len(classes) % len(PALETTE)])
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    if title:
        out.append(f'<title>{escape(title)}</title>')
    for w in walls:
        a, b = _clip(w.base, w.direction, box, w.kind == "line")
        (ax, ay), (bx, by) = px(a), px(b)
        dash = ' stroke-dasharray="6 3"' if w.kind == "line" else ""
        out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="{classes[w.m]}" '
                   f'stroke-width="2"{dash}><title>{escape(w.describe())}</title></line>')
        if w.kind == "ray":
            cx, cy = px(w.base)
            out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{classes[w.m]}"/>')
    y = 16
    for m, color in classes.items():
        out.append(f'<text x="8" y="{y}" font-size="12" fill="{color}">'
                   f'{escape(slope_label(m))} {m}</text>')
        y += 15
    out.append("</svg>")
    return "\n".join(out) + "\n"
