"""Deterministic SVG rendering of d=2 graphs and region classifications."""

from __future__ import annotations

from pathlib import Path

from .errors import UnsupportedDimensionError
from .lattice import Box, Torus
from .nngraph import OutMap, undirected_components
from .topology import RegionClassification

_SCALE = 24
_PAD = 20


def _palette(i: int) -> str:
    hue = (i * 137) % 360
    return f"hsl({hue},65%,48%)"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _geometry(dom):
    if dom.d != 2:
        raise UnsupportedDimensionError("SVG export renders d=2 only")
    w = dom.shape[0] * _SCALE + 2 * _PAD
    h = dom.shape[1] * _SCALE + 2 * _PAD

    def pos(site):
        x = (site[0] - dom._lo[0]) * _SCALE + _PAD
        y = h - ((site[1] - dom._lo[1]) * _SCALE + _PAD)
        return x, y

    return w, h, pos


def render_outmap_svg(g: OutMap, labeling=None) -> str:
    """Arrows on the lattice, components colored by label; wrap edges dashed."""
    dom = g.dom
    w, h, pos = _geometry(dom)
    if labeling is None:
        labeling = undirected_components(g)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for x, y in g.directed_edges():
        color = _palette(labeling.component_of(x))
        x0, y0 = pos(x)
        x1, y1 = pos(y)
        dashed = ""
        if isinstance(dom, Torus) and (abs(x[0] - y[0]) > 1 or abs(x[1] - y[1]) > 1):
            # seam edge: draw a stub in the step direction instead of a chord
            dv = dom.displacement(x, y)
            x1, y1 = x0 + dv[0] * _SCALE * 0.45, y0 - dv[1] * _SCALE * 0.45
            dashed = ' stroke-dasharray="3 2"'
        mx, my = x0 + 0.75 * (x1 - x0), y0 + 0.75 * (y1 - y0)
        parts.append(
            f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
            f'stroke="{color}" stroke-width="1.6"{dashed}/>'
        )
        parts.append(
            f'<circle cx="{_fmt(mx)}" cy="{_fmt(my)}" r="2.2" fill="{color}"/>'
        )
    for i in range(dom.n_sites):
        x0, y0 = pos(dom.index_site(i))
        parts.append(f'<circle cx="{_fmt(x0)}" cy="{_fmt(y0)}" r="1.5" fill="#222"/>')
    parts.append("</svg>")
    return "\n".join(parts)


_REGION_FILL = {"a": None, "b": "url(#hatch)", "c": "url(#crosshatch)"}


def render_regions_svg(rc: RegionClassification) -> str:
    """Type (a) regions shaded per component, (b)/(c) hatched."""
    dom = rc.window
    w, h, pos = _geometry(dom)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        "<defs>"
        '<pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse">'
        '<path d="M0,6 L6,0" stroke="#555" stroke-width="1"/></pattern>'
        '<pattern id="crosshatch" width="6" height="6" patternUnits="userSpaceOnUse">'
        '<path d="M0,6 L6,0 M0,0 L6,6" stroke="#555" stroke-width="1"/></pattern>'
        "</defs>",
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    half = _SCALE // 2
    for region in rc.regions:
        fill = _REGION_FILL[region.kind] or _palette(region.rid)
        for site in region.sites:
            x0, y0 = pos(site)
            parts.append(
                f'<rect x="{_fmt(x0 - half)}" y="{_fmt(y0 - half)}" '
                f'width="{_SCALE}" height="{_SCALE}" fill="{fill}" fill-opacity="0.55"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg(text: str, path):
    Path(path).write_text(text + "\n")
