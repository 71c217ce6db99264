"""Deterministic SVG floorplans.

Outdoor cells are cross-hatched, walls are thick black lines, doors are
quarter-circle sectors, windows are white segments on the wall and
furniture is drawn as rectangles with a tick on the front edge.
"""

from __future__ import annotations

import colorsys
import hashlib
from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import escape

from .grid import Direction
from .layout import CORRIDOR, Layout

CORRIDOR_FILL = "#e6e6e6"


@dataclass(frozen=True)
class RenderStyle:
    cell_px: int = 32
    wall_width: float = 4.0
    grid_width: float = 0.5
    furniture_width: float = 1.5
    window_width: float = 3.0
    legend: bool = True
    hatch_outdoor: bool = True

    def __post_init__(self):
        if self.cell_px < 4:
            raise ValueError("cell_px must be >= 4")


def room_color(name: str) -> str:
    """Pastel colour from a hash of the room name (independent of room order)."""
    h = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "big")
    hue = (h % 360) / 360.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.80, 0.55)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _n(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def render_svg(layout: Layout, artifacts=None, style: Optional[RenderStyle] = None) -> str:
    style = style or RenderStyle()
    sg = layout.scene
    W, L = sg.floor.width_cells, sg.floor.length_cells
    px = style.cell_px

    def xy(i, j):
        # cell corner (i, j) in grid units -> SVG point (y grows downwards)
        return i * px, (L - j) * px

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W * px}" height="{L * px}" viewBox="0 0 {W * px} {L * px}">',
        "<defs>",
        f'<pattern id="hatch" patternUnits="userSpaceOnUse" width="{_n(px / 4)}" height="{_n(px / 4)}">'
        f'<path d="M0,0 L{_n(px / 4)},{_n(px / 4)} M{_n(px / 4)},0 L0,{_n(px / 4)}" stroke="#888888" stroke-width="0.8"/>'
        "</pattern>",
        "</defs>",
        f'<rect x="0" y="0" width="{W * px}" height="{L * px}" fill="#ffffff"/>',
    ]
    fills = {CORRIDOR: CORRIDOR_FILL}
    fills.update({r.id: room_color(r.name) for r in sg.rooms})
    out.append('<g id="cells">')
    for j in range(L):
        for i in range(W):
            x, y = xy(i, j + 1)
            lab = layout.labels.get((i, j))
            fill = "url(#hatch)" if lab is None and style.hatch_outdoor else fills.get(lab, "#ffffff")
            out.append(f'<rect x="{x}" y="{y}" width="{px}" height="{px}" fill="{fill}" '
                       f'stroke="#cccccc" stroke-width="{_n(style.grid_width)}"/>')
    out.append("</g>")

    out.append('<g id="furniture">')
    for (k, l), b in sorted(layout.furniture.items()):
        x, y = xy(b.origin[0], b.origin[1] + b.dims[1])
        w, h = b.dims[0] * px, b.dims[1] * px
        out.append(f'<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="#ffffff" fill-opacity="0.85" '
                   f'stroke="#333333" stroke-width="{_n(style.furniture_width)}"/>')
        out.append(_front_tick(b, xy, px))
    out.append("</g>")

    if artifacts is not None:
        out.append('<g id="walls" stroke="#000000" stroke-linecap="square">')
        for wall in artifacts.walls:
            (x0, y0), (x1, y1) = _edge_points(wall.edge, xy)
            out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke-width="{_n(style.wall_width)}"/>')
        out.append("</g>")
        out.append('<g id="windows">')
        for win in artifacts.windows:
            (x0, y0), (x1, y1) = _edge_points(win.edge, xy, inset=px * 0.15)
            out.append(f'<line x1="{_n(x0)}" y1="{_n(y0)}" x2="{_n(x1)}" y2="{_n(y1)}" stroke="#ffffff" '
                       f'stroke-width="{_n(style.window_width)}"/>')
        out.append("</g>")
        out.append('<g id="doors">')
        for door in artifacts.doors:
            out.append(_door_sector(door, layout, xy, px, style))
        out.append("</g>")

    if style.legend:
        out.append('<g id="legend" font-family="sans-serif" text-anchor="middle" fill="#222222">')
        for r in sg.rooms:
            cells = layout.room_cells(r.id)
            if not cells:
                continue
            ci = sum(c[0] for c in cells) / len(cells) + 0.5
            cj = sum(c[1] for c in cells) / len(cells) + 0.5
            x, y = xy(ci, cj)
            out.append(f'<text x="{_n(x)}" y="{_n(y)}" font-size="{_n(px * 0.4)}">{escape(r.name)}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _edge_points(edge, xy, inset: float = 0.0):
    i, j = edge.cell
    d = edge.direction
    if d == Direction.E:
        a, b = xy(i + 1, j), xy(i + 1, j + 1)
    elif d == Direction.W:
        a, b = xy(i, j), xy(i, j + 1)
    elif d == Direction.N:
        a, b = xy(i, j + 1), xy(i + 1, j + 1)
    else:
        a, b = xy(i, j), xy(i + 1, j)
    if inset:
        dx, dy = b[0] - a[0], b[1] - a[1]
        length = (dx * dx + dy * dy) ** 0.5
        ux, uy = dx / length, dy / length
        a = (a[0] + ux * inset, a[1] + uy * inset)
        b = (b[0] - ux * inset, b[1] - uy * inset)
    return a, b


def _door_sector(door, layout, xy, px, style) -> str:
    (x0, y0), (x1, y1) = _edge_points(door.edge, xy)
    # swing into the door's room; entrance doors swing indoors
    inner = door.edge.cell
    if layout.labels.get(inner) != door.room and door.kind != "entrance":
        inner = door.edge.far()
    ci, cj = inner
    cx, cy = xy(ci + 0.5, cj + 0.5)
    mx, my = (x0 + x1) / 2, (y0 + y1) / 2
    nx, ny = cx - mx, cy - my
    norm = (nx * nx + ny * ny) ** 0.5
    nx, ny = nx / norm * px, ny / norm * px
    ox, oy = x0 + nx, y0 + ny
    cross = (x1 - x0) * ny - (y1 - y0) * nx
    sweep = 1 if cross > 0 else 0
    return (f'<line x1="{_n(x0)}" y1="{_n(y0)}" x2="{_n(x1)}" y2="{_n(y1)}" stroke="#ffffff" '
            f'stroke-width="{_n(style.wall_width + 1)}"/>'
            f'<path d="M{_n(x0)},{_n(y0)} L{_n(x1)},{_n(y1)} A{px},{px} 0 0,{sweep} {_n(ox)},{_n(oy)} Z" '
            f'fill="#ffffff" fill-opacity="0.6" stroke="#000000" stroke-width="1"/>')


def _front_tick(b, xy, px) -> str:
    i0, j0 = b.origin
    di, dj = b.dims
    nu = tuple(b.orientation)
    if nu == (0, 1):
        a, c = (i0, j0 + dj), (i0 + di, j0 + dj)
    elif nu == (0, -1):
        a, c = (i0, j0), (i0 + di, j0)
    elif nu == (1, 0):
        a, c = (i0 + di, j0), (i0 + di, j0 + dj)
    else:
        a, c = (i0, j0), (i0, j0 + dj)
    # shorten the tick to the middle half of the front edge, pulled slightly inside
    t0 = (a[0] + (c[0] - a[0]) * 0.25 - nu[0] * 0.12, a[1] + (c[1] - a[1]) * 0.25 - nu[1] * 0.12)
    t1 = (a[0] + (c[0] - a[0]) * 0.75 - nu[0] * 0.12, a[1] + (c[1] - a[1]) * 0.75 - nu[1] * 0.12)
    (x0, y0), (x1, y1) = xy(*t0), xy(*t1)
    return (f'<line class="front" x1="{_n(x0)}" y1="{_n(y0)}" x2="{_n(x1)}" y2="{_n(y1)}" '
            f'stroke="#c0392b" stroke-width="{_n(max(1.0, px / 10))}"/>')
