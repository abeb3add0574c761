"""Scan polygonization, map fusion and frontier extraction.

A scan becomes a star-shaped sector polygon around the sensor origin.  Edges
between two surface returns are Obstacle unless the range jumps between them
(an occlusion edge); everything else (radial sides, arcs at the range limit,
transitions into the unknown) is Free.  Fusing sectors by
union keeps the labels, and chains of Free edges left on the map boundary are
the frontiers that drive exploration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clip import BoolOp, EdgeLabel, LabeledPolygon, PolygonMap, boolean_op, snap_vertices
from .geom import EPS_PT, GeometryError, Point2, Pose2, ring_is_simple, simplify_polyline
from .sensor import HitKind, Scan

MIN_FRONTIER_LENGTH = 0.4
DROPOUT_REACH = 2  # a dropout is filled only when valid rays lie this close on both sides
MAX_RANGE_WINDOW = 3  # half-width of the min filter over neighbouring range-limit rays
JUMP_ABS = 0.2        # m; neighbouring returns farther apart in range than
JUMP_REL = 0.1        # max(JUMP_ABS, JUMP_REL * nearer range) are not one surface


class DegenerateScan(ValueError):
    pass


@dataclass(frozen=True)
class Frontier:
    chain: tuple      # Point2 vertices along the boundary
    length: float
    centroid: Point2  # arc-length midpoint of the chain (lies on the boundary)


def _limit_ranges(scan: Scan, window: int) -> np.ndarray:
    """Ranges with every MaxRange ray cut to the shortest MaxRange within ``window`` rays.

    The range limit is drawn per ray, so raw limit arcs are saw-toothed.  The
    filter only ever shortens them, so no unobserved space is claimed free,
    and the resulting stepped arcs simplify to few vertices.
    """
    r = np.array(scan.ranges, dtype=float)
    if window <= 0:
        return r
    is_max = np.array([h is HitKind.MAX_RANGE for h in scan.hits])
    lim = np.where(is_max, r, np.inf)
    padded = np.pad(lim, window, constant_values=np.inf)
    rolled = np.lib.stride_tricks.sliding_window_view(padded, 2 * window + 1).min(axis=1)
    return np.where(is_max, rolled, r)


def _scan_vertices(scan: Scan, pose_est: Pose2, window: int = MAX_RANGE_WINDOW):
    """Usable ray endpoints and whether each is a surface return."""
    hits = scan.hits
    n = len(hits)
    valid = [h is not HitKind.DROPOUT for h in hits]
    ranges = _limit_ranges(scan, window)
    a = pose_est.theta + scan.angles
    pts = np.column_stack([pose_est.x + ranges * np.cos(a), pose_est.y + ranges * np.sin(a)])
    out, solid = [], []
    for i in range(n):
        if valid[i]:
            out.append(pts[i])
            solid.append(hits[i] in (HitKind.OBSTACLE_HIT, HitKind.GHOST_HIT))
            continue
        lo = next((j for j in range(i - 1, i - DROPOUT_REACH - 1, -1) if j >= 0 and valid[j]), None)
        hi = next((j for j in range(i + 1, i + DROPOUT_REACH + 1) if j < n and valid[j]), None)
        if lo is None or hi is None:
            continue
        w = (i - lo) / (hi - lo)
        r = (1 - w) * ranges[lo] + w * ranges[hi]
        a = pose_est.theta + scan.angles[i]
        out.append(np.array([pose_est.x + r * math.cos(a), pose_est.y + r * math.sin(a)]))
        solid.append(False)  # unknown stays frontier
    return out, solid


def _depth_jumps(origin, pts) -> np.ndarray:
    """True between neighbouring endpoints whose ranges differ like an occlusion edge."""
    r = np.hypot(*(np.asarray(pts, dtype=float) - np.asarray(origin, dtype=float)).T)
    return np.abs(np.diff(r)) > np.maximum(JUMP_ABS, JUMP_REL * np.minimum(r[:-1], r[1:]))


def _assemble(origin, pts, solid, tol):
    """Ring and labels: origin, then endpoints; same-label runs simplified.

    Two surface returns are joined by an Obstacle edge unless their ranges
    jump: then the edge spans the unseen gap behind an occluding corner and
    stays Free.
    """
    jump = _depth_jumps(origin, pts)
    labels = [EdgeLabel.OBSTACLE if solid[i] and solid[i + 1] and not jump[i] else EdgeLabel.FREE
              for i in range(len(pts) - 1)]
    ring = [origin]
    lab = [EdgeLabel.FREE]  # origin -> first endpoint
    start = 0
    while start < len(labels):
        end = start
        while end + 1 < len(labels) and labels[end + 1] is labels[start]:
            end += 1
        run = pts[start:end + 2]
        kept = simplify_polyline(run, tol) if tol > 0 else [Point2(*p) for p in run]
        ring.extend(kept[:-1])
        lab.extend([labels[start]] * (len(kept) - 1))
        start = end + 1
    ring.append(Point2(*pts[-1]))
    lab.append(EdgeLabel.FREE)  # last endpoint -> origin
    return ring, lab


def _dedupe(ring, labels):
    out, lab = [], []
    for p, l in zip(ring, labels):
        if out and math.dist(out[-1], p) <= EPS_PT:
            # keep the earlier vertex; the merged edge takes the later label only
            # when the earlier was Free (Obstacle wins)
            if l is EdgeLabel.OBSTACLE:
                lab[-1] = l
            continue
        out.append(Point2(float(p[0]), float(p[1])))
        lab.append(l)
    while len(out) > 1 and math.dist(out[-1], out[0]) <= EPS_PT:
        out.pop()
        lab.pop()
    return out, lab


def scan_to_polygon(scan: Scan, pose_est: Pose2, simplify_tol: float = 0.02,
                    max_range_window: int = MAX_RANGE_WINDOW) -> LabeledPolygon:
    """Sector polygon of a scan placed at ``pose_est``."""
    if not all(math.isfinite(v) for v in (pose_est.x, pose_est.y, pose_est.theta)):
        raise ValueError("pose_est must be finite")
    pts, solid = _scan_vertices(scan, pose_est, max_range_window)
    if len(pts) < 3:
        raise DegenerateScan(f"only {len(pts)} usable ray endpoints")
    origin = Point2(pose_est.x, pose_est.y)
    for tol in (simplify_tol, 0.0):
        ring, labels = _dedupe(*_assemble(origin, pts, solid, tol))
        if len(ring) >= 3 and ring_is_simple(ring)[0]:
            break
    else:
        raise DegenerateScan("scan polygon is not simple")
    return LabeledPolygon(tuple(ring), tuple(labels))


def integrate_scan(pmap: PolygonMap, scan_poly: LabeledPolygon) -> PolygonMap:
    """Union of the map with a scan polygon, snapped to the grid.

    Crossing points are rounded away from the existing map, so its area never
    shrinks through rounding.
    """
    merged = boolean_op(pmap, PolygonMap.of(scan_poly), BoolOp.UNION, grow_subject=True)
    return snap_vertices(merged)


def free_chains(pmap: PolygonMap) -> list:
    """Every maximal run of Free edges as ``(vertices, length)``."""
    chains = []
    for ring, labels in pmap.labeled_rings():
        n = len(ring)
        free = [l is EdgeLabel.FREE for l in labels]
        if all(free):
            verts = list(ring) + [ring[0]]
            chains.append((verts, _polyline_length(verts)))
            continue
        if not any(free):
            continue
        # begin just after an Obstacle edge so no run wraps past the start
        first = next(i for i in range(n) if free[i] and not free[i - 1])
        i = first
        while True:
            if free[i] and not free[i - 1]:
                verts = [ring[i]]
                j = i
                while free[j % n]:
                    verts.append(ring[(j + 1) % n])
                    j += 1
                chains.append((verts, _polyline_length(verts)))
            i = (i + 1) % n
            if i == first:
                break
    return chains


def _polyline_length(verts) -> float:
    return sum(math.dist(a, b) for a, b in zip(verts, verts[1:]))


def _arc_midpoint(verts, length) -> Point2:
    half, acc = 0.5 * length, 0.0
    for a, b in zip(verts, verts[1:]):
        seg = math.dist(a, b)
        if acc + seg >= half and seg > 0:
            t = (half - acc) / seg
            return Point2(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        acc += seg
    return Point2(*verts[-1])


def extract_frontiers(pmap: PolygonMap, min_length: float = MIN_FRONTIER_LENGTH) -> list:
    """Free-edge chains at least ``min_length`` long, longest first."""
    out = []
    for verts, length in free_chains(pmap):
        if length >= min_length:
            out.append(Frontier(tuple(Point2(*v) for v in verts), length, _arc_midpoint(verts, length)))
    out.sort(key=lambda f: (-f.length, f.centroid.x, f.centroid.y))
    return out


def frontier_total(frontiers) -> float:
    return sum(f.length for f in frontiers)
