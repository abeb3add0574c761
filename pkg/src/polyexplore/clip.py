"""Boolean operations on edge-labeled polygon maps.

The engine works on coordinates snapped to a fixed grid (``SNAP_GRID``) and
held as integer-valued floats, so orientation predicates are exact for worlds
up to a few hundred meters across.  An operation runs in four passes:

1. every input edge is cut at every crossing, T-junction and collinear
   overlap (crossing points are rounded to the grid; the cut is repeated
   until no proper crossing is left);
2. coincident fragments are merged; each fragment remembers how many times
   it occurs in the subject and in the clip map, and which labels it carries;
3. the even-odd parities of both inputs left of every fragment come from a
   leftward ray cast from the fragment's midpoint; fragments are bucketed
   into horizontal bands so each ray meets only the edges spanning its
   height (the right side follows by flipping the fragment's own parity);
4. fragments that separate result interior from exterior are oriented with
   the interior on their left and linked into rings.

Labels ride along with fragments, so no relabeling by proximity is needed.
Where coincident source edges disagree, Obstacle wins.
"""

from __future__ import annotations

import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geom import (EPS_AREA, EPS_PT, GeometryError, Point2, cross, points_in_rings, ring_edges,
                   signed_area)

SNAP_GRID = 1e-5
_SCALE = 100000.0  # 1 / SNAP_GRID; dividing by it rounds grid values exactly
_MAX_CUT_ROUNDS = 32
_GROW_ROUNDS = 4  # directed rounding only this many rounds; later cuts round to nearest
# Keeps every |cross product| of grid-unit coordinates below 2**53.
_MAX_UNITS = 4.0e7


class DegenerateInput(GeometryError):
    pass


class EdgeLabel(str, enum.Enum):
    OBSTACLE = "Obstacle"
    FREE = "Free"


class BoolOp(str, enum.Enum):
    UNION = "union"
    INTERSECTION = "intersection"
    DIFFERENCE = "difference"


def _reverse_labeled(ring, labels):
    n = len(ring)
    rev = tuple(reversed(ring))
    return rev, tuple(labels[(n - 2 - k) % n] for k in range(n))


@dataclass(frozen=True)
class LabeledPolygon:
    """Outer ring (CCW) with holes (CW); label ``i`` belongs to edge ``i -> i+1``."""

    outer: tuple
    outer_labels: tuple
    holes: tuple = ()
    hole_labels: tuple = ()

    def __post_init__(self):
        outer = tuple(Point2(float(x), float(y)) for x, y in self.outer)
        olab = tuple(EdgeLabel(v) for v in self.outer_labels)
        if len(olab) != len(outer):
            raise DegenerateInput("outer label count does not match vertex count")
        if signed_area(outer) < 0:
            outer, olab = _reverse_labeled(outer, olab)
        holes, hlabs = [], []
        if len(self.hole_labels) != len(self.holes):
            raise DegenerateInput("hole label lists do not match holes")
        for h, hl in zip(self.holes, self.hole_labels):
            h = tuple(Point2(float(x), float(y)) for x, y in h)
            hl = tuple(EdgeLabel(v) for v in hl)
            if len(hl) != len(h):
                raise DegenerateInput("hole label count does not match vertex count")
            if signed_area(h) > 0:
                h, hl = _reverse_labeled(h, hl)
            holes.append(h)
            hlabs.append(hl)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "outer_labels", olab)
        object.__setattr__(self, "holes", tuple(holes))
        object.__setattr__(self, "hole_labels", tuple(hlabs))

    @classmethod
    def from_ring(cls, ring, label=EdgeLabel.FREE, labels=None) -> "LabeledPolygon":
        if labels is None:
            labels = [label] * len(ring)
        return cls(tuple(ring), tuple(labels))

    def labeled_rings(self):
        yield self.outer, self.outer_labels
        yield from zip(self.holes, self.hole_labels)

    @property
    def area(self) -> float:
        return signed_area(self.outer) + sum(signed_area(h) for h in self.holes)

    def vertex_count(self) -> int:
        return len(self.outer) + sum(len(h) for h in self.holes)


@dataclass(frozen=True)
class PolygonMap:
    polygons: tuple = ()
    total_area: float = field(default=0.0, init=False)

    def __post_init__(self):
        polys = tuple(self.polygons)
        object.__setattr__(self, "polygons", polys)
        object.__setattr__(self, "total_area", sum(p.area for p in polys))

    @classmethod
    def empty(cls) -> "PolygonMap":
        return cls(())

    @classmethod
    def of(cls, *polygons: LabeledPolygon) -> "PolygonMap":
        return cls(tuple(polygons))

    def rings(self) -> list:
        return [r for p in self.polygons for r, _ in p.labeled_rings()]

    def labeled_rings(self):
        for p in self.polygons:
            yield from p.labeled_rings()

    def labeled_edges(self):
        """Yield ``(a, b, label)`` for every boundary edge."""
        for p in self.polygons:
            for ring, labels in p.labeled_rings():
                for (a, b), lab in zip(ring_edges(ring), labels):
                    yield a, b, lab

    def label_length(self, label: EdgeLabel) -> float:
        return sum(math.dist(a, b) for a, b, lab in self.labeled_edges() if lab is label)

    def vertex_count(self) -> int:
        return sum(p.vertex_count() for p in self.polygons)

    def is_empty(self) -> bool:
        return not self.polygons


# ---------------------------------------------------------------------------
# label rule


def dominant_label(labels: Iterable[EdgeLabel]) -> EdgeLabel:
    """Obstacle wins over Free on coincident edges."""
    labels = list(labels)
    if not labels:
        raise ValueError("edge has no source label")
    return EdgeLabel.OBSTACLE if EdgeLabel.OBSTACLE in labels else EdgeLabel.FREE


def propagate_labels(result_edges: Sequence, source_edges: Sequence) -> list:
    """Label result edges from the source edges that contain them.

    ``result_edges`` holds ``(a, b)`` pairs, ``source_edges`` holds
    ``(a, b, label)``.  A source edge contributes when it is collinear with the
    result edge and covers it, both within ``EPS_PT``.  Subdivisions therefore
    inherit the label of the edge they were cut from.
    """
    if not source_edges:
        raise ValueError("no source edges")
    src = np.array([[a[0], a[1], b[0], b[1]] for a, b, _ in source_edges], dtype=float)
    src_lab = [EdgeLabel(lab) for _, _, lab in source_edges]
    ax, ay, bx, by = src.T
    dx, dy = bx - ax, by - ay
    L = np.hypot(dx, dy)
    L = np.where(L == 0.0, 1.0, L)
    out = []
    for a, b in result_edges:
        ok = np.ones(len(src), dtype=bool)
        for px, py in (a, b):
            # distance from point to the source segment
            t = np.clip(((px - ax) * dx + (py - ay) * dy) / (L * L), 0.0, 1.0)
            d = np.hypot(px - (ax + t * dx), py - (ay + t * dy))
            ok &= d <= EPS_PT
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            raise ValueError(f"result edge {a}->{b} does not trace to any source edge")
        out.append(dominant_label(src_lab[i] for i in idx))
    return out


# ---------------------------------------------------------------------------
# snapping


def snap_vertices(pmap: PolygonMap, grid: float = SNAP_GRID) -> PolygonMap:
    """Round vertices to ``grid`` and drop rings that collapse."""
    if grid <= 0:
        raise ValueError("grid must be positive")
    inv = 1.0 / grid
    if abs(inv - round(inv)) < 1e-6 * inv:
        inv = float(round(inv))
        snap = lambda v: round(v * inv) / inv
    else:
        snap = lambda v: round(v / grid) * grid
    polys = []
    for poly in pmap.polygons:
        rings = []
        for ring, labels in poly.labeled_rings():
            pts, labs = [], []
            for (x, y), lab in zip(ring, labels):
                p = Point2(snap(x), snap(y))
                if pts and pts[-1] == p:
                    # collapsed edge: the surviving edge keeps the stronger label
                    labs[-1] = dominant_label((labs[-1], lab))
                    continue
                pts.append(p)
                labs.append(lab)
            while len(pts) > 1 and pts[0] == pts[-1]:
                pts.pop()
                labs[-2] = dominant_label((labs[-2], labs[-1]))
                labs.pop()
            if len(set(pts)) < 3 or abs(signed_area(pts)) < EPS_AREA:
                rings.append(None)
            else:
                rings.append((tuple(pts), tuple(labs)))
        if rings[0] is None:
            continue
        holes = [r for r in rings[1:] if r is not None]
        polys.append(LabeledPolygon(rings[0][0], rings[0][1],
                                    tuple(h for h, _ in holes), tuple(l for _, l in holes)))
    return PolygonMap(tuple(polys))


# ---------------------------------------------------------------------------
# overlay engine


def _check_ring_cheap(ring, labels):
    if len(ring) < 3:
        raise DegenerateInput(f"ring with {len(ring)} vertices")
    if len(labels) != len(ring):
        raise DegenerateInput("label count does not match vertex count")
    for i, (a, b) in enumerate(ring_edges(ring)):
        if not (math.isfinite(a[0]) and math.isfinite(a[1])):
            raise DegenerateInput(f"non-finite vertex {i}")
        if math.dist(a, b) <= EPS_PT:
            raise DegenerateInput(f"repeated vertex {i}")
    if abs(signed_area(ring)) <= EPS_AREA:
        raise DegenerateInput("zero-area ring")


def _collect_segments(pmap: PolygonMap, src: int, rows: list, raw: list, validate: bool):
    for poly in pmap.polygons:
        for ring, labels in poly.labeled_rings():
            if validate:
                _check_ring_cheap(ring, labels)
            q = [(float(round(x * _SCALE)), float(round(y * _SCALE))) for x, y in ring]
            n = len(q)
            for i in range(n):
                a, b = q[i], q[(i + 1) % n]
                if a != b:
                    lab = 1 if labels[i] is EdgeLabel.OBSTACLE else 0
                    rows.append((a[0], a[1], b[0], b[1], src, lab))
                    raw.append((ring[i], ring[(i + 1) % n]))


def _candidate_pairs(x1, y1, x2, y2):
    """Index pairs (i < j in sorted order) whose bounding boxes overlap."""
    xmin, xmax = np.minimum(x1, x2), np.maximum(x1, x2)
    ymin, ymax = np.minimum(y1, y2), np.maximum(y1, y2)
    order = np.argsort(xmin, kind="stable")
    xs = xmin[order]
    ends = np.searchsorted(xs, xmax[order], side="right")
    starts = np.arange(len(order)) + 1
    counts = np.maximum(ends - starts, 0)
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    ii = np.repeat(np.arange(len(order)), counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    jj = np.repeat(starts, counts) + offs
    i, j = order[ii], order[jj]
    keep = (ymin[i] <= ymax[j]) & (ymin[j] <= ymax[i])
    return i[keep], j[keep]


def _strictly_inside(px, py, ax, ay, bx, by, o):
    """``p`` collinear (o == 0) and strictly between ``a`` and ``b``."""
    return (o == 0) & (((px - ax) * (bx - ax) + (py - ay) * (by - ay)) > 0) \
        & (((px - bx) * (ax - bx) + (py - by) * (ay - by)) > 0)


def _raw_cross(raw, i, j) -> bool:
    """Do two original (unsnapped) input edges cross properly?"""
    a, b = raw[i]
    c, d = raw[j]
    tol = EPS_PT * max(math.dist(a, b), math.dist(c, d))
    o1, o2 = cross(c, d, a), cross(c, d, b)
    o3, o4 = cross(a, b, c), cross(a, b, d)
    return ((o1 > tol and o2 < -tol) or (o1 < -tol and o2 > tol)) and \
        ((o3 > tol and o4 < -tol) or (o3 < -tol and o4 > tol))


def _round_outside(px, py, sx, sy, ex, ey):
    """Grid point next to (px, py) lying on or right of the edge s->e.

    Of the four corners of the grid cell holding the point, the nearest one
    that is not strictly left of the edge is taken; a line through a cell
    always leaves at least one corner on each side.
    """
    fx, fy = np.floor(px), np.floor(py)
    best = np.full(px.shape, np.inf)
    bx, by = np.rint(px), np.rint(py)
    for cx in (fx, fx + 1.0):
        for cy in (fy, fy + 1.0):
            side = (ex - sx) * (cy - sy) - (ey - sy) * (cx - sx)
            d = (cx - px) ** 2 + (cy - py) ** 2
            take = (side <= 0) & (d < best)
            best = np.where(take, d, best)
            bx, by = np.where(take, cx, bx), np.where(take, cy, by)
    return bx, by


def _cut_segments(seg: np.ndarray, raw=None, grow_subject: bool = False) -> np.ndarray:
    """Split segments until no two of them cross or touch in an interior point.

    With ``raw`` (the unsnapped input edges, aligned with ``seg``), a crossing
    between two edges of the same input raises ``DegenerateInput`` unless it
    only exists because of snapping.  With ``grow_subject`` a crossing between
    a subject and a clip edge is rounded to the exterior side of the subject
    edge, so the subject region can only gain area from snapping (apart from
    rare cascades, which fall back to nearest rounding after a few rounds).
    """
    for rnd in range(_MAX_CUT_ROUNDS):
        x1, y1, x2, y2 = seg[:, 0], seg[:, 1], seg[:, 2], seg[:, 3]
        i, j = _candidate_pairs(x1, y1, x2, y2)
        if i.size == 0:
            return seg
        ax, ay, bx, by = x1[i], y1[i], x2[i], y2[i]
        cx, cy, dx, dy = x1[j], y1[j], x2[j], y2[j]
        o1 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
        o2 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)
        o3 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        o4 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
        proper = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)

        cuts = defaultdict(list)
        if proper.any():
            pi = np.flatnonzero(proper)
            if raw is not None and rnd == 0:
                same = pi[seg[i[pi], 4] == seg[j[pi], 4]]
                bad = [k for k in same.tolist() if _raw_cross(raw, int(i[k]), int(j[k]))]
                if bad:
                    k = bad[0]
                    raise DegenerateInput(
                        "input edges cross: "
                        f"({ax[k] / _SCALE:.6g},{ay[k] / _SCALE:.6g})-"
                        f"({bx[k] / _SCALE:.6g},{by[k] / _SCALE:.6g})")
            t = o1[pi] / (o1[pi] - o2[pi])
            ex_x = ax[pi] + t * (bx[pi] - ax[pi])
            ex_y = ay[pi] + t * (by[pi] - ay[pi])
            px, py = np.rint(ex_x), np.rint(ex_y)
            # Directed rounding can creep when nearly coincident edges keep
            # re-crossing one cell further out; after a few rounds switch to
            # nearest rounding, which always settles (cost: at most a few grid
            # cells of area).
            if grow_subject and rnd < _GROW_ROUNDS:
                si, sj = seg[i[pi], 4], seg[j[pi], 4]
                mixed = si != sj
                if mixed.any():
                    # subject edge of each mixed pair
                    use_i = si == 0
                    s0x = np.where(use_i, ax[pi], cx[pi])
                    s0y = np.where(use_i, ay[pi], cy[pi])
                    s1x = np.where(use_i, bx[pi], dx[pi])
                    s1y = np.where(use_i, by[pi], dy[pi])
                    ox, oy = _round_outside(ex_x, ex_y, s0x, s0y, s1x, s1y)
                    px, py = np.where(mixed, ox, px), np.where(mixed, oy, py)
            for k, x, y in zip(pi.tolist(), px.tolist(), py.tolist()):
                cuts[int(i[k])].append((x, y))
                cuts[int(j[k])].append((x, y))
        # endpoints lying in the interior of the other segment
        for (px, py, sx, sy, ex, ey, o, tgt) in (
                (ax, ay, cx, cy, dx, dy, o1, j), (bx, by, cx, cy, dx, dy, o2, j),
                (cx, cy, ax, ay, bx, by, o3, i), (dx, dy, ax, ay, bx, by, o4, i)):
            hit = np.flatnonzero(_strictly_inside(px, py, sx, sy, ex, ey, o))
            for k in hit.tolist():
                cuts[int(tgt[k])].append((float(px[k]), float(py[k])))
        if not cuts:
            return seg

        rows = []
        cut_ids = sorted(cuts)
        for s in cut_ids:
            sx, sy, ex, ey, src, lab = seg[s].tolist()
            pts = {(sx, sy), (ex, ey)}
            pts.update(cuts[s])
            vx, vy = ex - sx, ey - sy
            chain = sorted(pts, key=lambda p: (p[0] - sx) * vx + (p[1] - sy) * vy)
            for p, q in zip(chain, chain[1:]):
                if p != q:
                    rows.append((p[0], p[1], q[0], q[1], src, lab))
        keep = np.ones(len(seg), dtype=bool)
        keep[cut_ids] = False
        seg = np.vstack([seg[keep], np.array(rows, dtype=float).reshape(-1, 6)])
    raise RuntimeError("segment cutting did not converge")


def _inside(op: BoolOp, a: int, b: int) -> bool:
    if op is BoolOp.UNION:
        return bool(a or b)
    if op is BoolOp.INTERSECTION:
        return bool(a and b)
    return bool(a and not b)


def _sweep_parities(frags):
    """Return per-fragment (A, B) parity on the left side of the fragment.

    Fragments are stored lower endpoint first (left endpoint first when
    horizontal); their left side is -x for rising fragments and +y for
    horizontal ones.  Fragments never cross, so the parity is constant along
    each one and a single leftward ray from its midpoint decides it.  Rays
    and edges are paired through horizontal bands so only edges spanning the
    ray's height are tested.
    """
    n = len(frags)
    if n == 0:
        return []
    f = np.asarray(frags, dtype=float)
    x1, y1, x2, y2 = f[:, 0], f[:, 1], f[:, 2], f[:, 3]
    # doubled midpoint coordinates stay integral
    mx2, my2 = x1 + x2, y1 + y2
    ray_y = 0.5 * my2
    rising = np.flatnonzero(y1 != y2)
    if len(rising) == 0:
        return [(0, 0)] * n

    lo, hi = y1[rising], y2[rising]
    ymin, ymax = float(lo.min()), float(hi.max())
    nb = max(1, min(4096, int(math.sqrt(n)) * 2))
    width = (ymax - ymin) / nb or 1.0

    def band(y):
        return np.clip(((y - ymin) / width).astype(np.int64), 0, nb - 1)

    b0, b1 = band(lo), band(hi)
    span = b1 - b0 + 1
    memb_g = np.repeat(rising, span)
    first = np.repeat(np.cumsum(span) - span, span)
    memb_b = np.repeat(b0, span) + (np.arange(len(memb_g)) - first)
    order = np.argsort(memb_b, kind="stable")
    memb_g, memb_b = memb_g[order], memb_b[order]
    bstart = np.searchsorted(memb_b, np.arange(nb))
    bcount = np.searchsorted(memb_b, np.arange(nb), side="right") - bstart

    rb = band(ray_y)
    cnt = bcount[rb]
    pf = np.repeat(np.arange(n), cnt)
    offs = np.arange(len(pf)) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    pg = memb_g[np.repeat(bstart[rb], cnt) + offs]

    ry = ray_y[pf]
    keep = (pg != pf) & (y1[pg] <= ry) & (ry < y2[pg])
    pf, pg = pf[keep], pg[keep]
    # ray origin strictly right of a rising edge <=> negative cross product
    c = ((x2[pg] - x1[pg]) * (my2[pf] - 2.0 * y1[pg])
         - (y2[pg] - y1[pg]) * (mx2[pf] - 2.0 * x1[pg]))
    left_of = c < 0
    pf, pg = pf[left_of], pg[left_of]
    pa = np.bincount(pf, weights=f[pg, 4], minlength=n).astype(np.int64) & 1
    pb = np.bincount(pf, weights=f[pg, 5], minlength=n).astype(np.int64) & 1
    return list(zip(pa.tolist(), pb.tolist()))


def _turn_key(dx_in, dy_in, dx_out, dy_out):
    # clockwise angle from the reversed incoming direction to the outgoing one
    a_back = math.atan2(-dy_in, -dx_in)
    a_out = math.atan2(dy_out, dx_out)
    ang = (a_back - a_out) % (2.0 * math.pi)
    return ang if ang > 0 else 2.0 * math.pi


def _assemble(edges):
    """Link directed edges (interior on the left) into closed rings."""
    outgoing = defaultdict(list)
    for k, (p, q, _) in enumerate(edges):
        outgoing[p].append(k)
    used = [False] * len(edges)
    rings = []
    for start in range(len(edges)):
        if used[start]:
            continue
        pts, labs = [], []
        cur = start
        for _ in range(len(edges) + 1):
            used[cur] = True
            p, q, lab = edges[cur]
            pts.append(p)
            labs.append(lab)
            cand = outgoing[q]
            if len(cand) == 1:
                nxt = cand[0]
            else:
                dxi, dyi = q[0] - p[0], q[1] - p[1]
                nxt = min(cand, key=lambda k: _turn_key(
                    dxi, dyi, edges[k][1][0] - q[0], edges[k][1][1] - q[1]))
            if nxt == start:
                break
            if used[nxt]:
                raise RuntimeError("ring assembly hit a used edge")
            cur = nxt
        else:
            raise RuntimeError("ring assembly did not close")
        rings.append(_drop_collinear(pts, labs))
    return [r for r in rings if r is not None]


def _drop_collinear(pts, labs):
    """Remove straight-through vertices whose two edges carry the same label."""
    pts, labs = list(pts), list(labs)
    k = 0
    stable = 0
    while len(pts) >= 3 and stable < len(pts):
        n = len(pts)
        k %= n
        a, v, b = pts[k - 1], pts[k], pts[(k + 1) % n]
        c = (v[0] - a[0]) * (b[1] - a[1]) - (v[1] - a[1]) * (b[0] - a[0])
        fwd = (v[0] - a[0]) * (b[0] - v[0]) + (v[1] - a[1]) * (b[1] - v[1]) > 0
        if c == 0 and fwd and labs[k - 1] == labs[k]:
            # edge k-1 absorbs edge k
            del pts[k]
            del labs[k]
            stable = 0
            continue
        k += 1
        stable += 1
    if len(pts) < 3:
        return None
    return pts, labs


def _ring_area2(pts) -> float:
    s = 0.0
    n = len(pts)
    for k in range(n):
        x1, y1 = pts[k]
        x2, y2 = pts[(k + 1) % n]
        s += x1 * y2 - x2 * y1
    return s


def boolean_op(subject: PolygonMap, clip: PolygonMap, op, validate: bool = True,
               grow_subject: bool = False) -> PolygonMap:
    """Even-odd boolean of two labeled maps.

    Raises ``DegenerateInput`` when an input ring is malformed or when two
    edges of the same input cross.  ``grow_subject`` biases crossing points
    toward the outside of the subject (used when fusing scans into a map so
    its area never shrinks through rounding).
    """
    op = BoolOp(op)
    rows: list = []
    raw: list = []
    _collect_segments(subject, 0, rows, raw, validate)
    _collect_segments(clip, 1, rows, raw, validate)
    if not rows:
        return PolygonMap.empty()
    seg = np.array(rows, dtype=float)
    if np.abs(seg[:, :4]).max() > _MAX_UNITS:
        raise DegenerateInput("coordinates exceed the supported extent")
    seg = _cut_segments(seg, raw if validate else None, grow_subject)

    # merge coincident fragments
    merged: dict = {}
    for x1, y1, x2, y2, src, lab in seg.tolist():
        p, q = (x1, y1), (x2, y2)
        if (y1, x1) > (y2, x2):
            p, q = q, p
        entry = merged.get((p, q))
        if entry is None:
            entry = merged[(p, q)] = [0, 0, [], []]
        entry[int(src)] += 1
        entry[2 + int(src)].append(EdgeLabel.OBSTACLE if lab else EdgeLabel.FREE)

    frags, frag_labels = [], []
    for (p, q), (ca, cb, la, lb) in merged.items():
        ta, tb = ca & 1, cb & 1
        if not (ta or tb):
            continue
        frags.append((p[0], p[1], q[0], q[1], ta, tb))
        frag_labels.append(dominant_label((la if ta else []) + (lb if tb else [])))

    left = _sweep_parities(frags)
    edges = []
    for k, f in enumerate(frags):
        la, lb = left[k]
        ra, rb = la ^ f[4], lb ^ f[5]
        inl, inr = _inside(op, la, lb), _inside(op, ra, rb)
        if inl == inr:
            continue
        p, q = (f[0], f[1]), (f[2], f[3])
        if not inl:
            p, q = q, p
        edges.append((p, q, frag_labels[k]))

    return _build_map(_assemble(edges))


def _build_map(rings) -> PolygonMap:
    outers, holes = [], []
    for pts, labs in rings:
        a2 = _ring_area2(pts)
        if abs(a2) * 0.5 / (_SCALE * _SCALE) < EPS_AREA:
            continue
        (outers if a2 > 0 else holes).append((a2, pts, labs))
    outers.sort(key=lambda r: r[0])
    children = [[] for _ in outers]
    if holes:
        # probe each hole at the midpoint of its first edge; smallest outer wins
        mx = np.array([0.5 * (h[1][0][0] + h[1][1][0]) for h in holes])
        my = np.array([0.5 * (h[1][0][1] + h[1][1][1]) for h in holes])
        owner = np.full(len(holes), -1)
        for oi, (_, opts, _) in enumerate(outers):
            todo = np.flatnonzero(owner < 0)
            if len(todo) == 0:
                break
            hit = points_in_rings(mx[todo], my[todo], [opts])
            owner[todo[hit]] = oi
        if (owner < 0).any():
            raise RuntimeError("hole without an enclosing ring")
        for (_, pts, labs), oi in zip(holes, owner):
            children[oi].append((pts, labs))

    def to_m(pts):
        return tuple(Point2(x / _SCALE, y / _SCALE) for x, y in pts)

    polys = []
    for (_, pts, labs), kids in zip(outers, children):
        polys.append(LabeledPolygon(to_m(pts), tuple(labs),
                                    tuple(to_m(h) for h, _ in kids),
                                    tuple(tuple(l) for _, l in kids)))
    # deterministic order: by lowest-leftmost outer vertex
    polys.sort(key=lambda p: min((v.y, v.x) for v in p.outer))
    return PolygonMap(tuple(polys))


def union(a: PolygonMap, b: PolygonMap) -> PolygonMap:
    return boolean_op(a, b, BoolOp.UNION)


def intersection(a: PolygonMap, b: PolygonMap) -> PolygonMap:
    return boolean_op(a, b, BoolOp.INTERSECTION)


def difference(a: PolygonMap, b: PolygonMap) -> PolygonMap:
    return boolean_op(a, b, BoolOp.DIFFERENCE)


# ---------------------------------------------------------------------------
# JSON debug dump

def map_to_dict(pmap: PolygonMap) -> dict:
    polys = []
    for p in pmap.polygons:
        polys.append({
            "outer": [[v.x, v.y] for v in p.outer],
            "outer_labels": [l.value for l in p.outer_labels],
            "holes": [[[v.x, v.y] for v in h] for h in p.holes],
            "hole_labels": [[l.value for l in hl] for hl in p.hole_labels],
        })
    return {"schema": 1, "total_area": pmap.total_area, "polygons": polys}


def map_from_dict(doc: dict) -> PolygonMap:
    polys = []
    for p in doc.get("polygons", []):
        polys.append(LabeledPolygon(
            tuple(tuple(v) for v in p["outer"]), tuple(p["outer_labels"]),
            tuple(tuple(tuple(v) for v in h) for h in p.get("holes", [])),
            tuple(tuple(hl) for hl in p.get("hole_labels", []))))
    return PolygonMap(tuple(polys))


def dump_map(pmap: PolygonMap) -> str:
    return json.dumps(map_to_dict(pmap), indent=1)
