"""SVG drawings of complexes, vertices shaded by color."""
from __future__ import annotations

import hashlib
from xml.sax.saxutils import escape

from .coloring import Color, coloring
from .complex import Complex
from .glued import GluedComplex

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
)


def color_swatch(c: Color) -> str:
    digest = hashlib.sha256(repr(c.key()).encode()).digest()
    return PALETTE[digest[0] % len(PALETTE)]


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _draw(K: Complex, size: float, dx: float, dy: float, scale: float = 1.0,
          with_vertices: bool = True) -> list[str]:
    ctx = coloring(K) if K.level else None
    out = []
    for t in K.tiles:
        pts = " ".join(f"{_fmt(dx + float(K.vertices[c].pos[0]) * size * scale)},"
                       f"{_fmt(dy + float(K.vertices[c].pos[1]) * size * scale)}" for c in t.corners)
        out.append(f'<polygon class="tile" points="{pts}" fill="none" stroke="#444" stroke-width="0.5"/>')
    if with_vertices and ctx is not None:
        r = max(1.0, 4.0 * scale / (1 + K.level))
        for v in K.vertices:
            x, y = (dx + float(v.pos[0]) * size * scale, dy + float(v.pos[1]) * size * scale)
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
                       f'fill="{color_swatch(ctx.color(v.id))}"/>')
    return out


def render_svg(K: Complex, size: int = 512) -> str:
    margin = 8
    body = _draw(K, size, margin, margin)
    total = size + 2 * margin
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" '
            f'viewBox="0 0 {total} {total}">')
    title = f"<title>{escape(K.spec.name)} level {K.level}, {len(K.tiles)} tiles</title>"
    return "\n".join([head, title] + body + ["</svg>"]) + "\n"


def render_glued_svg(G: GluedComplex, size: int = 512) -> str:
    """Schematic drawing: the root component, then each glued component as a flap beside it."""
    margin = 8
    flap = size / 4
    root = G.components[0].K
    body = _draw(root, size, margin, margin)
    per_row = max(1, int(size // (flap + margin)))
    for k, comp in enumerate(G.components[1:]):
        x = margin + (k % per_row) * (flap + margin)
        y = 2 * margin + size + (k // per_row) * (flap + margin)
        body.append(f'<text x="{_fmt(x)}" y="{_fmt(y - 1)}" font-size="6">component {comp.index}'
                    f' core {comp.core}</text>')
        body.extend(_draw(comp.K, flap, x, y))
    rows = (len(G.components) - 1 + per_row - 1) // per_row
    width = size + 2 * margin
    height = size + 3 * margin + rows * (flap + margin)
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">')
    return "\n".join([head] + body + ["</svg>"]) + "\n"


def legend(K: Complex) -> str:
    """Swatch for every Color occurring in K, one per line, sorted."""
    ctx = coloring(K)
    colors = {ctx.color(v) for v in range(len(K.vertices))}
    lines = sorted(f"{color_swatch(c)} {c.vertex_type.key()} level3={c.three_level} bracket={c.bracket}"
                   for c in colors)
    return "\n".join(lines) + "\n"


def svg_tile_count(svg: str) -> int:
    return svg.count('class="tile"')

