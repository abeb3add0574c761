"""SVG snapshots of a map at a fixed 100 px/m with a fixed palette."""

from __future__ import annotations

from ..clip import EdgeLabel, PolygonMap
from ..sensor import World

PX_PER_M = 100.0
MARGIN_PX = 20.0

PALETTE = {
    "background": "#ffffff",
    "world": "#bbbbbb",
    "fill": "#eef6ee",
    "obstacle": "#000000",
    "free": "#2e8b57",
    "frontier": "#ff8c00",
    "true_path": "#d62728",
    "est_path": "#1f77b4",
}


def _fmt(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_svg(pmap: PolygonMap, world: World = None, frontiers=(), trace=()) -> str:
    pts = [p for r in pmap.rings() for p in r]
    if world is not None:
        pts += list(world.bounds)
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0 = min(p[0] for p in pts)
    y1 = max(p[1] for p in pts)
    w = (max(p[0] for p in pts) - x0) * PX_PER_M + 2 * MARGIN_PX
    h = (y1 - min(p[1] for p in pts)) * PX_PER_M + 2 * MARGIN_PX

    def xy(p):
        return f"{_fmt((p[0] - x0) * PX_PER_M + MARGIN_PX)},{_fmt((y1 - p[1]) * PX_PER_M + MARGIN_PX)}"

    def polyline(points, color, width, extra=""):
        return (f'<polyline points="{" ".join(xy(p) for p in points)}" fill="none" '
                f'stroke="{color}" stroke-width="{width}"{extra}/>')

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
           f'viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
           f'<rect width="100%" height="100%" fill="{PALETTE["background"]}"/>']
    if world is not None:
        out.append('<g id="world">')
        for ring in [world.bounds] + [ob.ring for ob in world.obstacles]:
            out.append(polyline(list(ring) + [ring[0]], PALETTE["world"], 1))
        out.append("</g>")
    out.append('<g id="map">')
    for poly in pmap.polygons:
        d = " ".join("M " + " L ".join(xy(p) for p in ring) + " Z" for ring, _ in poly.labeled_rings())
        out.append(f'<path d="{d}" fill="{PALETTE["fill"]}" fill-rule="evenodd" stroke="none"/>')
    for a, b, lab in pmap.labeled_edges():
        if lab is EdgeLabel.OBSTACLE:
            out.append(polyline([a, b], PALETTE["obstacle"], 2))
        else:
            out.append(polyline([a, b], PALETTE["free"], 1))
    out.append("</g>")
    if frontiers:
        out.append('<g id="frontiers">')
        for f in frontiers:
            out.append(polyline(f.chain, PALETTE["frontier"], 3))
        out.append("</g>")
    if trace:
        out.append('<g id="trajectory">')
        out.append(polyline([r.true_pose.position for r in trace], PALETTE["true_path"], 1))
        out.append(polyline([r.est_pose.position for r in trace], PALETTE["est_path"], 1,
                            ' stroke-dasharray="4,3"'))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
