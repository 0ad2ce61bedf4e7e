"""Deterministic SVG rendering of lozenge tilings.

Lattice coordinates are sheared into the standard isometric picture
(X = x - y/2, Y = -y * sqrt(3)/2), one polygon per lozenge, fill color keyed
by type.  Output is byte-for-byte reproducible for a fixed input: floats are
formatted to fixed precision and lozenges are drawn in sorted order.
"""

from __future__ import annotations

import math

from .tiling import Tiling

DEFAULT_STYLE = {
    "fill": {1: "#cfe8ff", 2: "#ffd9a8", 3: "#c8e6c9"},
    "stroke": "#333333",
    "stroke_width": 0.04,
    "unit": 24.0,
    "margin": 0.6,
}

_SQ3_2 = math.sqrt(3.0) / 2.0

_CORNERS = {
    1: ((0, 0), (0, 1), (1, 2), (1, 1)),
    2: ((0, 0), (1, 0), (2, 1), (1, 1)),
    3: ((0, 0), (1, 0), (1, 1), (0, 1)),
}


def _to_screen(x, y):
    return x - y / 2.0, -y * _SQ3_2


def render_svg(t: Tiling, style: dict | None = None) -> str:
    """One <polygon> per lozenge; an empty tiling yields a valid empty SVG."""
    st = dict(DEFAULT_STYLE)
    if style:
        st.update(style)
    unit = st["unit"]

    pts_all = []
    polys = []
    for x, y, typ in t.lozenges:
        corners = [(x + dx, y + dy) for dx, dy in _CORNERS[typ]]
        scr = [_to_screen(cx, cy) for cx, cy in corners]
        pts_all.extend(scr)
        polys.append((typ, scr))

    if pts_all:
        xs = [p[0] for p in pts_all]
        ys = [p[1] for p in pts_all]
        x0, x1 = min(xs) - st["margin"], max(xs) + st["margin"]
        y0, y1 = min(ys) - st["margin"], max(ys) + st["margin"]
    else:
        x0, y0, x1, y1 = 0.0, 0.0, 1.0, 1.0

    w = (x1 - x0) * unit
    h = (y1 - y0) * unit
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.2f}" height="{h:.2f}" '
        f'viewBox="{x0:.4f} {y0:.4f} {x1 - x0:.4f} {y1 - y0:.4f}">',
    ]
    for typ, scr in polys:
        pts = " ".join(f"{px:.4f},{py:.4f}" for px, py in scr)
        out.append(
            f'<polygon points="{pts}" fill="{st["fill"][typ]}" '
            f'stroke="{st["stroke"]}" stroke-width="{st["stroke_width"]:.3f}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
