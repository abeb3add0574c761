"""Planar geometry primitives shared by the sensor, clipper, mapper and planner."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

# Global tolerances. Other modules import these instead of defining their own.
EPS_PT = 1e-6     # meters
EPS_AREA = 1e-12  # square meters


class GeometryError(ValueError):
    """A ring or polygon violates its structural invariants."""


class Point2(NamedTuple):
    x: float
    y: float


Ring = Sequence[Point2]


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.remainder(theta, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class Pose2:
    """Planar pose; also used for relative increments (dx, dy in the start frame)."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)

    def compose(self, delta: "Pose2") -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(self.x + c * delta.x - s * delta.y,
                     self.y + s * delta.x + c * delta.y,
                     self.theta + delta.theta)

    def relative_to(self, origin: "Pose2") -> "Pose2":
        """Increment that takes ``origin`` to ``self``."""
        dx, dy = self.x - origin.x, self.y - origin.y
        c, s = math.cos(origin.theta), math.sin(origin.theta)
        return Pose2(c * dx + s * dy, -s * dx + c * dy, self.theta - origin.theta)

    def distance_to(self, other: "Pose2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


class Orientation(enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"
    COLLINEAR = "Collinear"


class Location(enum.Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"
    BOUNDARY = "Boundary"


class IntersectionKind(enum.Enum):
    PROPER = "Proper"
    TOUCH = "Touch"
    OVERLAP = "OverlapCollinear"
    NONE = "None"


class Intersection(NamedTuple):
    kind: IntersectionKind
    points: tuple  # () | (p,) | (p, q) for a collinear overlap


def cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def orient(p, q, r) -> Orientation:
    c = cross(p, q, r)
    if abs(c) <= EPS_AREA:
        return Orientation.COLLINEAR
    return Orientation.LEFT if c > 0 else Orientation.RIGHT


def signed_area(ring: Ring) -> float:
    """Shoelace area, positive for counter-clockwise rings."""
    n = len(ring)
    if n < 3:
        return 0.0
    a = 0.0
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        a += x1 * y2 - x2 * y1
    return 0.5 * a


def ring_edges(ring: Ring):
    n = len(ring)
    for i in range(n):
        yield ring[i], ring[(i + 1) % n]


def ring_perimeter(ring: Ring) -> float:
    return sum(math.dist(a, b) for a, b in ring_edges(ring))


def point_segment_distance(p, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def closest_point_on_segment(p, a, b) -> Point2:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return Point2(a[0], a[1])
    t = min(1.0, max(0.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
    return Point2(a[0] + t * dx, a[1] + t * dy)


def point_in_region(p, rings: Sequence[Ring]) -> Location:
    """Even-odd classification of ``p`` against a set of rings."""
    px, py = p
    inside = False
    for ring in rings:
        for a, b in ring_edges(ring):
            if point_segment_distance(p, a, b) <= EPS_PT:
                return Location.BOUNDARY
            (x1, y1), (x2, y2) = a, b
            if (y1 > py) != (y2 > py):
                xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                if px < xint:
                    inside = not inside
    return Location.INSIDE if inside else Location.OUTSIDE


def points_in_rings(xs: np.ndarray, ys: np.ndarray, rings: Sequence[Ring],
                    chunk: int = 1 << 20) -> np.ndarray:
    """Vectorized even-odd inside test (no boundary class)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    shape = np.broadcast(xs, ys).shape
    px, py = np.broadcast_to(xs, shape).ravel(), np.broadcast_to(ys, shape).ravel()
    segs = [np.hstack([r, np.roll(r, -1, axis=0)])
            for r in (np.asarray(r, dtype=float).reshape(-1, 2) for r in rings) if len(r)]
    if not segs or px.size == 0:
        return np.zeros(shape, dtype=bool)
    s = np.vstack(segs)
    s = s[s[:, 1] != s[:, 3]]
    x1, y1, x2, y2 = s[:, 0], s[:, 1], s[:, 2], s[:, 3]
    slope = (x2 - x1) / (y2 - y1)
    out = np.empty(px.size, dtype=bool)
    step = max(1, chunk // max(1, len(s)))
    for i in range(0, px.size, step):
        qx, qy = px[i:i + step, None], py[i:i + step, None]
        crosses = (y1 > qy) != (y2 > qy)
        xint = x1 + (qy - y1) * slope
        out[i:i + step] = (np.count_nonzero(crosses & (qx < xint), axis=1) & 1).astype(bool)
    return out.reshape(shape)


def _on_segment(p, a, b) -> bool:
    # p assumed collinear with a-b
    return (min(a[0], b[0]) - EPS_PT <= p[0] <= max(a[0], b[0]) + EPS_PT
            and min(a[1], b[1]) - EPS_PT <= p[1] <= max(a[1], b[1]) + EPS_PT)


def segment_intersect(s1, s2) -> Intersection:
    """Classify the intersection of two closed segments.

    Touch covers an endpoint of one segment lying on the other; a collinear
    overlap reports the shared sub-segment ordered along ``s1``.
    """
    a, b = s1
    c, d = s2
    d1 = cross(c, d, a)
    d2 = cross(c, d, b)
    d3 = cross(a, b, c)
    d4 = cross(a, b, d)
    col = [abs(v) <= EPS_AREA for v in (d1, d2, d3, d4)]

    if all(col):
        ux, uy = b[0] - a[0], b[1] - a[1]
        L2 = ux * ux + uy * uy
        if L2 == 0.0:
            if _on_segment(a, c, d):
                return Intersection(IntersectionKind.TOUCH, (Point2(*a),))
            return Intersection(IntersectionKind.NONE, ())
        tc = ((c[0] - a[0]) * ux + (c[1] - a[1]) * uy) / L2
        td = ((d[0] - a[0]) * ux + (d[1] - a[1]) * uy) / L2
        lo, hi = max(0.0, min(tc, td)), min(1.0, max(tc, td))
        tol = EPS_PT / math.sqrt(L2)
        if hi < lo - tol:
            return Intersection(IntersectionKind.NONE, ())
        p = Point2(a[0] + lo * ux, a[1] + lo * uy)
        if hi - lo <= tol:
            return Intersection(IntersectionKind.TOUCH, (p,))
        q = Point2(a[0] + hi * ux, a[1] + hi * uy)
        return Intersection(IntersectionKind.OVERLAP, (p, q))

    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and not (col[0] or col[1]) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)) and not (col[2] or col[3]):
        t = d1 / (d1 - d2)
        p = Point2(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        return Intersection(IntersectionKind.PROPER, (p,))

    for flag, p, seg in ((col[0], a, (c, d)), (col[1], b, (c, d)),
                         (col[2], c, (a, b)), (col[3], d, (a, b))):
        if flag and _on_segment(p, *seg):
            return Intersection(IntersectionKind.TOUCH, (Point2(*p),))
    return Intersection(IntersectionKind.NONE, ())


def simplify_polyline(points: Sequence, tol: float) -> list:
    """Douglas-Peucker reduction with endpoints preserved.

    A point is dropped when its distance to the current chord (as a segment)
    is at most ``tol``; ties for the farthest point go to the lowest index.
    """
    pts = [Point2(float(p[0]), float(p[1])) for p in points]
    n = len(pts)
    if n <= 2:
        return pts
    arr = np.asarray(pts, dtype=float)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        a, b = arr[i], arr[j]
        mid = arr[i + 1:j]
        d = b - a
        L2 = float(d @ d)
        if L2 == 0.0:
            dist = np.hypot(mid[:, 0] - a[0], mid[:, 1] - a[1])
        else:
            t = np.clip(((mid - a) @ d) / L2, 0.0, 1.0)
            proj = a + t[:, None] * d
            dist = np.hypot(mid[:, 0] - proj[:, 0], mid[:, 1] - proj[:, 1])
        k = int(np.argmax(dist))
        if dist[k] > tol:
            m = i + 1 + k
            keep[m] = True
            stack.append((m, j))
            stack.append((i, m))
    return [pts[i] for i in range(n) if keep[i]]


def ring_is_simple(ring: Ring) -> tuple[bool, str]:
    """Check that no two non-adjacent edges of a ring meet."""
    n = len(ring)
    edges = list(ring_edges(ring))
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            hit = segment_intersect(edges[i], edges[j])
            if hit.kind is IntersectionKind.NONE:
                continue
            if adjacent and hit.kind is IntersectionKind.TOUCH:
                continue
            return False, f"edges {i} and {j} intersect ({hit.kind.value})"
    return True, ""


def validate_ring(ring: Ring, check_simple: bool = True) -> None:
    if len(ring) < 3:
        raise GeometryError(f"ring has {len(ring)} vertices, need at least 3")
    for i, (a, b) in enumerate(ring_edges(ring)):
        if not (math.isfinite(a[0]) and math.isfinite(a[1])):
            raise GeometryError(f"vertex {i} is not finite")
        if math.dist(a, b) <= EPS_PT:
            raise GeometryError(f"vertices {i} and {(i + 1) % len(ring)} coincide")
    if abs(signed_area(ring)) <= EPS_AREA:
        raise GeometryError("ring has zero area")
    if check_simple:
        ok, why = ring_is_simple(ring)
        if not ok:
            raise GeometryError(f"ring is not simple: {why}")
