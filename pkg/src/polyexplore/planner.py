"""Shortest paths through the known free region with a clearance margin.

Graph nodes are the start, points pushed off the region's reflex corners,
and candidate end points around the goal.  Two nodes are linked when the
segment between them keeps ``clearance`` from every boundary edge.  The
start is exempt from part of that rule: a robot that sits closer than
``clearance`` to the boundary (always true right after the first scan, where
it sits on the sector apex) may leave along any segment that does not get
closer still.
"""

from __future__ import annotations

import math

import numpy as np
import shapely
from scipy.sparse.csgraph import dijkstra

from .clip import PolygonMap
from .geom import Point2, points_in_rings

CORNER_MARGIN = 1.05   # reflex nodes sit where the walls offset by this many clearances meet
MAX_MITER = 4.0        # ...but never more than this many clearances from a sharp corner
CANDIDATE_DIRS = 16
MAX_CANDIDATES = 24  # most preferred end points kept for the graph search
MIN_TURN = math.radians(3.0)


class StartOutsideMap(ValueError):
    pass


def _edge_array(pmap: PolygonMap) -> np.ndarray:
    rows = [(a[0], a[1], b[0], b[1]) for a, b, _ in pmap.labeled_edges()]
    return np.asarray(rows, dtype=float).reshape(-1, 4)


def _point_seg_dist(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    L2 = np.where(L2 == 0, 1.0, L2)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / L2, 0.0, 1.0)
    return np.hypot(px - ax - t * dx, py - ay - t * dy)


def clearance_of(points: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest boundary edge."""
    if len(edges) == 0:
        return np.full(len(points), np.inf)
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    d = _point_seg_dist(p[:, 0:1], p[:, 1:2], edges[None, :, 0], edges[None, :, 1],
                        edges[None, :, 2], edges[None, :, 3])
    return d.min(axis=1)


def segment_clearance(p: np.ndarray, q: np.ndarray, edges: np.ndarray,
                      reach: float = np.inf) -> np.ndarray:
    """Minimum distance between each segment p[k]-q[k] and the boundary (0 if crossing).

    With a finite ``reach`` only edges whose bounding box comes within
    ``reach`` of the segment's are examined; results above ``reach`` are
    then only lower bounds (reported as inf when nothing is that close).
    """
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    out = np.full(len(p), np.inf)
    if len(edges) == 0 or len(p) == 0:
        return out
    if np.isfinite(reach):
        lo = np.minimum(p, q) - reach
        hi = np.maximum(p, q) + reach
        elo = np.minimum(edges[:, 0:2], edges[:, 2:4])
        ehi = np.maximum(edges[:, 0:2], edges[:, 2:4])
        near = ((elo[None, :, 0] <= hi[:, None, 0]) & (ehi[None, :, 0] >= lo[:, None, 0])
                & (elo[None, :, 1] <= hi[:, None, 1]) & (ehi[None, :, 1] >= lo[:, None, 1]))
        ki, ke = np.nonzero(near)
    else:
        ki, ke = (a.ravel() for a in np.indices((len(p), len(edges))))
    if len(ki) == 0:
        return out
    px, py, qx, qy = p[ki, 0], p[ki, 1], q[ki, 0], q[ki, 1]
    ax, ay, bx, by = (edges[ke, k] for k in range(4))
    d = np.minimum.reduce([
        _point_seg_dist(px, py, ax, ay, bx, by),
        _point_seg_dist(qx, qy, ax, ay, bx, by),
        _point_seg_dist(ax, ay, px, py, qx, qy),
        _point_seg_dist(bx, by, px, py, qx, qy),
    ])
    o1 = (qx - px) * (ay - py) - (qy - py) * (ax - px)
    o2 = (qx - px) * (by - py) - (qy - py) * (bx - px)
    o3 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    o4 = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
    d = np.where((o1 * o2 < 0) & (o3 * o4 < 0), 0.0, d)
    np.minimum.at(out, ki, d)
    return out


def segments_clear(p: np.ndarray, q: np.ndarray, edges: np.ndarray, clearance: float) -> np.ndarray:
    """True where segment p[k]-q[k] stays at least ``clearance`` from every edge."""
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    if len(edges) == 0:
        return np.ones(len(p), dtype=bool)
    boundary = shapely.multilinestrings(edges.reshape(-1, 2, 2))
    shapely.prepare(boundary)
    lines = shapely.linestrings(np.stack([p, q], axis=1))
    return ~shapely.dwithin(lines, boundary, clearance - 1e-9)


def inside_map(pmap: PolygonMap, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return points_in_rings(pts[:, 0], pts[:, 1], pmap.rings())


def reflex_nodes(pmap: PolygonMap, clearance: float) -> np.ndarray:
    """Points pushed into free space off every reflex corner of the region.

    Each node is the miter point of the corner: both adjacent walls, shifted
    inward by slightly more than ``clearance``, pass through it, so segments
    leaving it along either wall keep the clearance.
    """
    out = []
    off = CORNER_MARGIN * clearance
    for ring in pmap.rings():
        r = np.asarray(ring, dtype=float)
        prev, nxt = np.roll(r, 1, axis=0), np.roll(r, -1, axis=0)
        e1, e2 = r - prev, nxt - r
        e1 /= np.linalg.norm(e1, axis=1)[:, None]
        e2 /= np.linalg.norm(e2, axis=1)[:, None]
        turn = np.arctan2(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0], (e1 * e2).sum(axis=1))
        # region lies left of every edge, so a right turn is a reflex corner
        for k in np.flatnonzero(turn < -MIN_TURN):
            n1 = np.array([-e1[k, 1], e1[k, 0]])
            n2 = np.array([-e2[k, 1], e2[k, 0]])
            n = n1 + n2
            norm = np.hypot(*n)
            b = n / norm if norm > 1e-9 else -e1[k]
            miter = off / max(math.sqrt(0.5 * (1.0 + n1 @ n2)), 1e-9)
            out.append(r[k] + min(miter, MAX_MITER * clearance) * b)
    pts = np.asarray(out, dtype=float).reshape(-1, 2)
    return _thin(pts, clearance)


def _thin(pts: np.ndarray, spacing: float) -> np.ndarray:
    """Keep one point per ``spacing``-sized grid cell (the first in input order)."""
    if len(pts) == 0 or spacing <= 0:
        return pts
    cells = np.floor(pts / spacing).astype(np.int64)
    _, first = np.unique(cells, axis=0, return_index=True)
    return pts[np.sort(first)]


def goal_candidates(goal, goal_tolerance: float, clearance: float, standoff: float = 0.0):
    """Points within ``goal_tolerance`` of ``goal`` ordered by preference.

    Preference is closeness of their distance from the goal to ``standoff``
    (0 = as close as possible), then angle.
    """
    gx, gy = goal
    pts, key = [(gx, gy)], [standoff]
    step = 0.1
    radii = np.arange(step, goal_tolerance + 1e-9, step)
    ang = np.arange(CANDIDATE_DIRS) * 2 * math.pi / CANDIDATE_DIRS
    for rad in radii:
        for a in ang:
            pts.append((gx + rad * math.cos(a), gy + rad * math.sin(a)))
            key.append(abs(rad - standoff))
    order = np.argsort(np.asarray(key), kind="stable")
    return np.asarray(pts)[order], np.asarray(key)[order]


def plan_path(pmap: PolygonMap, start, goal, clearance: float = 0.25,
              goal_tolerance: float = 0.6, standoff: float = 0.0):
    """Shortest clearance-respecting polyline from ``start`` toward ``goal``.

    The path ends at the most preferred reachable point within
    ``goal_tolerance`` of ``goal`` (see ``goal_candidates``); ties go to the
    shorter path.  Returns a list of ``Point2`` or None when nothing is
    reachable.
    """
    start = np.asarray(start, dtype=float)
    if pmap.is_empty() or not inside_map(pmap, start)[0]:
        raise StartOutsideMap(f"start {tuple(start)} is outside the known free region")
    edges = _edge_array(pmap)
    start_clear = min(clearance, float(clearance_of(start, edges)[0]))

    cands, keys = goal_candidates(goal, goal_tolerance, clearance, standoff)
    ok = inside_map(pmap, cands) & (clearance_of(cands, edges) >= clearance)
    cands, keys = cands[ok][:MAX_CANDIDATES], keys[ok][:MAX_CANDIDATES]
    if len(cands) == 0:
        return None

    def start_links(targets):
        c = segment_clearance(np.repeat(start[None], len(targets), 0), targets, edges,
                              2 * clearance)
        good = c >= start_clear - 1e-9
        if start_clear < clearance:
            # the segment may only touch the boundary at the start itself
            mid = 0.5 * (start[None] + targets)
            good &= inside_map(pmap, mid)
        return good

    # fast path: a candidate of the most preferred level is directly visible
    direct = start_links(cands) & (np.abs(keys - keys[0]) <= 1e-12)
    if direct.any():
        sel = np.flatnonzero(direct)
        lens = np.hypot(*(cands[sel] - start).T)
        k = sel[int(np.argmin(lens))]
        return [Point2(*start), Point2(*cands[k])]

    corners = reflex_nodes(pmap, clearance)
    if len(corners):
        corners = corners[inside_map(pmap, corners) & (clearance_of(corners, edges) >= clearance - 1e-9)]
    nodes = np.vstack([start[None], corners, cands])
    n, nc = len(nodes), len(corners)
    iu, ju = np.triu_indices(n, 1)
    # candidate-to-candidate links never help
    keep = ~((iu > nc) & (ju > nc)) & (iu != 0)
    iu, ju = iu[keep], ju[keep]
    w = np.zeros((n, n))
    if len(iu):
        good = segments_clear(nodes[iu], nodes[ju], edges, clearance)
        lens = np.hypot(*(nodes[iu] - nodes[ju]).T)
        w[iu[good], ju[good]] = np.maximum(lens[good], 1e-12)
    sl = start_links(nodes[1:])
    lens0 = np.hypot(*(nodes[1:] - start).T)
    w[0, 1:] = np.where(sl, np.maximum(lens0, 1e-12), 0.0)
    dist, pred = dijkstra(w, directed=False, indices=0, return_predecessors=True)
    cd = dist[1 + nc:]
    reach = np.isfinite(cd)
    if not reach.any():
        return None
    best = min(keys[reach])
    sel = np.flatnonzero(reach & (np.abs(keys - best) <= 1e-12))
    k = 1 + nc + sel[int(np.argmin(cd[sel]))]
    path = []
    while k >= 0:
        path.append(Point2(*nodes[k]))
        k = pred[k]
    return path[::-1]


def path_length(path) -> float:
    return sum(math.dist(a, b) for a, b in zip(path, path[1:]))
