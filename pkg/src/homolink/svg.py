"""Deterministic SVG 1.1 drawings of planning results."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .scenario import ResultBundle, Scenario, build_region

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

WIDTH = 480
LEGEND_ROW = 16


class ProjectionError(ValueError):
    pass


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".") if v != 0 else "0"


def parse_projection(text: str) -> tuple[int, int]:
    """'xy' / 'xz' / '0,2' style axis pair."""
    names = {"x": 0, "y": 1, "z": 2, "w": 3}
    text = text.strip().lower()
    if "," in text:
        a, b = (int(t) for t in text.split(","))
    elif len(text) == 2 and all(ch in names for ch in text):
        a, b = names[text[0]], names[text[1]]
    else:
        raise ProjectionError(f"cannot read projection {text!r}; use e.g. xy or 0,2")
    if a == b:
        raise ProjectionError("projection axes must differ")
    return a, b


def emit_svg(result: ResultBundle, scenario: Scenario, project: tuple[int, int] | None = None) -> str:
    """Obstacles, skeleton marks and one coloured polyline per class, plus a legend."""
    D = scenario.D
    if project is None:
        if D != 2:
            raise ProjectionError(f"D={D} scene needs a projection axis pair")
        project = (0, 1)
    a, b = project
    if max(a, b) >= D:
        raise ProjectionError(f"projection {project} outside R^{D}")

    grid = scenario.doc.get("grid")
    if grid:
        lo = np.array([grid["lower"][a], grid["lower"][b]], float)
        hi = np.array([grid["upper"][a], grid["upper"][b]], float)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    span = np.maximum(hi - lo, 1e-12)
    scale = WIDTH / max(span)
    h_plot = span[1] * scale
    n_rows = len(result.classes)
    height = h_plot + 8 + LEGEND_ROW * max(n_rows, 1) + 8

    def xy(p) -> tuple[str, str]:
        return _fmt((p[a] - lo[0]) * scale), _fmt(h_plot - (p[b] - lo[1]) * scale)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_fmt(WIDTH)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(WIDTH)} {_fmt(height)}">',
        f"<title>{escape(scenario.name)}</title>",
        f'<rect x="0" y="0" width="{_fmt(span[0] * scale)}" height="{_fmt(h_plot)}" '
        'fill="white" stroke="black" stroke-width="1"/>',
        '<g id="obstacles" fill="#bbbbbb" stroke="none">',
    ]
    for spec in (grid or {}).get("blocked", []):
        reg = build_region(spec)
        if spec["type"] == "ball":
            cx, cy = xy(reg.center)
            out.append(f'<circle cx="{cx}" cy="{cy}" r="{_fmt(reg.radius * scale)}"/>')
        elif spec["type"] == "box":
            x0, y1 = xy(reg.lower)
            x1, y0 = xy(reg.upper)
            out.append(f'<rect x="{x0}" y="{y0}" width="{_fmt(float(x1) - float(x0))}" '
                       f'height="{_fmt(float(y1) - float(y0))}"/>')
        else:
            pts = list(reg.points) + ([reg.points[0]] if reg.closed else [])
            coords = " ".join(",".join(xy(p)) for p in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="#bbbbbb" '
                       f'stroke-width="{_fmt(2 * reg.radius * scale)}" stroke-linejoin="round"/>')
    out.append("</g>")

    out.append('<g id="skeletons" stroke="black" fill="none" stroke-width="1.5">')
    for label, chain in scenario.skeleton_set():
        if chain.dim == 0:
            for p in chain.points[chain.cells[:, 0]]:
                cx, cy = xy(p)
                out.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="black"><title>{escape(label)}</title></circle>')
        else:
            for cell in chain.cells:
                pts = chain.points[list(cell) + [cell[0]] if chain.dim > 1 else list(cell)]
                coords = " ".join(",".join(xy(p)) for p in pts)
                out.append(f'<polyline points="{coords}"/>')
    out.append("</g>")

    out.append('<g id="classes" fill="none" stroke-width="2">')
    for i, cls in enumerate(result.classes):
        colour = PALETTE[i % len(PALETTE)]
        coords = " ".join(",".join(xy(p)) for p in cls["path"])
        out.append(f'<polyline class="path" stroke="{colour}" points="{coords}"/>')
    out.append("</g>")

    out.append('<g id="legend" font-family="monospace" font-size="11">')
    y = h_plot + 8
    for i, cls in enumerate(result.classes):
        colour = PALETTE[i % len(PALETTE)]
        sig = ", ".join(f"{v:.3f}" for v in cls["signature"])
        text = f"class {cls['rank']}: cost {cls['cost']:.3f}  [{sig}]"
        out.append(f'<g class="legend-row"><rect x="4" y="{_fmt(y + 3)}" width="10" height="10" fill="{colour}"/>'
                   f'<text x="20" y="{_fmt(y + 12)}">{escape(text)}</text></g>')
        y += LEGEND_ROW
    if not result.classes:
        out.append(f'<text x="4" y="{_fmt(y + 12)}">no classes</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
