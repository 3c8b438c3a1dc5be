"""Minimal SVG dumps for 2-D sets: tiling pieces and rectangle unions.

Renders from report JSON (never from live objects), so the CLI can redraw
any stored report.  Rationals arrive as "p/q" strings; rendering is the one
place floats are fine.
"""

from __future__ import annotations

from fractions import Fraction

PALETTE = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
    "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
]


def _f(s) -> float:
    return float(Fraction(s)) if isinstance(s, str) else float(s)


def _svg(width, height, body, view) -> str:
    x0, y0, w, h = view
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{x0} {y0} {w} {h}" preserveAspectRatio="xMidYMid meet">\n'
        f'<g transform="scale(1,-1)">\n{body}</g>\n</svg>\n'
    )


def tiling_svg(tiling_json: dict, cell_limit: int = 300_000) -> str:
    """Pieces of a quasi-tiling as unit cells colored by tile index."""
    cells = []
    for piece in tiling_json.get("pieces", []):
        if "R" not in piece:
            raise ValueError("tiling pieces were not inlined; cannot render")
        color = PALETTE[piece["tile_index"] % len(PALETTE)]
        for coords in piece["R"]:
            if len(coords) != 2:
                raise ValueError("tiling SVG needs 2-D coordinates")
            cells.append((coords[0], coords[1], color))
    if len(cells) > cell_limit:
        raise ValueError(f"too many cells to render: {len(cells)}")
    if not cells:
        return _svg(400, 400, "", (0, 0, 1, 1))
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    body = "".join(
        f'<rect x="{x}" y="{y}" width="1" height="1" fill="{color}" '
        f'stroke="white" stroke-width="0.05"/>\n'
        for x, y, color in cells
    )
    view = (min(xs) - 1, -(max(ys) + 2), max(xs) - min(xs) + 3, max(ys) - min(ys) + 3)
    return _svg(640, 640, body, view)


def set_svg(elements: list) -> str:
    """A plain 2-D point set as unit cells."""
    if not elements:
        return _svg(400, 400, "", (0, 0, 1, 1))
    body = "".join(
        f'<rect x="{x}" y="{y}" width="1" height="1" fill="{PALETTE[0]}"/>\n'
        for x, y in elements
    )
    xs = [e[0] for e in elements]
    ys = [e[1] for e in elements]
    view = (min(xs) - 1, -(max(ys) + 2), max(xs) - min(xs) + 3, max(ys) - min(ys) + 3)
    return _svg(640, 640, body, view)


def rect_unions_svg(named_regions: list, t_cap: float | None = None) -> str:
    """Rectangle unions in the (u, t) chart, one color per named region.

    ``named_regions`` is a list of (name, rect-union-json) pairs.  Raw
    coordinates are used; for families with wildly uneven t extents pass
    ``t_cap`` to clip tall rectangles for display (the drawing is then a
    window onto the region, not the region itself, and says so).
    """
    body = ""
    bounds = None
    for idx, (name, region) in enumerate(named_regions):
        color = PALETTE[idx % len(PALETTE)]
        for rect in region.get("rects", []):
            u1, u2, t1, t2 = (_f(v) for v in rect)
            if t_cap is not None and t2 > t_cap:
                if t1 >= t_cap:
                    continue
                t2 = t_cap
                name = f"{name} (clipped at t={t_cap})"
            body += (
                f'<rect x="{u1}" y="{t1}" width="{u2 - u1}" height="{t2 - t1}" '
                f'fill="{color}" fill-opacity="0.6" stroke="{color}" '
                f'stroke-width="0.02"><title>{name}</title></rect>\n'
            )
            box = (u1, t1, u2, t2)
            if bounds is None:
                bounds = list(box)
            else:
                bounds[0] = min(bounds[0], box[0])
                bounds[1] = min(bounds[1], box[1])
                bounds[2] = max(bounds[2], box[2])
                bounds[3] = max(bounds[3], box[3])
    if bounds is None:
        return _svg(400, 400, "", (0, 0, 1, 1))
    pad_u = 0.05 * (bounds[2] - bounds[0]) + 0.1
    pad_t = 0.05 * (bounds[3] - bounds[1]) + 0.1
    view = (
        bounds[0] - pad_u,
        -(bounds[3] + pad_t),
        (bounds[2] - bounds[0]) + 2 * pad_u,
        (bounds[3] - bounds[1]) + 2 * pad_t,
    )
    return _svg(640, 640, body, view)
