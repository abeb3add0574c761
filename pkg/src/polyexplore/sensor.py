"""Planar depth-scan simulation with an illumination-dependent range envelope.

A scan is a fan of rays over the horizontal field of view.  Each ray draws its
own effective maximum range from the envelope of the active lighting
condition, so the cut-off varies ray to ray the way it does with material and
shading.  Reflective obstacles may return a ghost: the ray continues past the
surface for one more leg and reports the summed path length along the
original direction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .geom import (GeometryError, Location, Point2, Pose2, point_in_region,
                   ring_edges, signed_area, validate_ring)


class PoseInObstacle(ValueError):
    pass


class Illumination(str, enum.Enum):
    INDOOR = "Indoor"
    BRIGHT_SUN = "BrightSun"
    SHADOW = "Shadow"
    EVENING = "Evening"


class Material(str, enum.Enum):
    MATTE = "Matte"
    REFLECTIVE = "Reflective"


class HitKind(str, enum.Enum):
    OBSTACLE_HIT = "ObstacleHit"
    MAX_RANGE = "MaxRange"
    DROPOUT = "Dropout"
    GHOST_HIT = "GhostHit"


def default_ranges() -> dict:
    # BrightSun / Shadow / Evening ceilings come from outdoor trials with the
    # depth camera; the Indoor band and the Evening floor are extrapolated.
    return {
        Illumination.INDOOR: (7.5, 8.0),
        Illumination.BRIGHT_SUN: (1.2, 2.4),
        Illumination.SHADOW: (3.5, 6.0),
        Illumination.EVENING: (11.0, 12.0),
    }


@dataclass
class SensorConfig:
    fov_deg: float = 70.0
    num_rays: int = 141
    ranges: dict = field(default_factory=default_ranges)
    min_range: float = 0.5
    range_noise_sigma: float = 0.01
    dropout_base: float = 0.01
    dropout_near_limit: float = 0.2
    ghost_gain: float = 0.3
    ghost_mode: str = "transmit"   # "transmit" | "mirror"
    clutter_rate: float = 2.0      # mean of Poisson clutter features per scan
    illumination: Optional[Illumination] = None  # overrides the world's

    def __post_init__(self):
        self.ranges = {Illumination(k): (float(v[0]), float(v[1])) for k, v in self.ranges.items()}
        if self.illumination is not None:
            self.illumination = Illumination(self.illumination)
        self.validate()

    def validate(self):
        if not (0 < self.fov_deg <= 180):
            raise ValueError("fov_deg must lie in (0, 180]")
        if self.num_rays < 3:
            raise ValueError("num_rays must be at least 3")
        for cond in Illumination:
            lo, hi = self.ranges[cond]
            if not (0 < lo < hi):
                raise ValueError(f"range band for {cond.value} must satisfy 0 < lo < hi")
        for name in ("dropout_base", "dropout_near_limit", "ghost_gain"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be a probability")
        if self.range_noise_sigma < 0 or self.clutter_rate < 0 or self.min_range < 0:
            raise ValueError("noise, clutter rate and min range must be non-negative")
        if self.ghost_mode not in ("transmit", "mirror"):
            raise ValueError("ghost_mode must be 'transmit' or 'mirror'")

    @property
    def fov(self) -> float:
        return math.radians(self.fov_deg)

    def band(self, illum: Illumination) -> tuple:
        return self.ranges[Illumination(illum)]


@dataclass(frozen=True)
class Obstacle:
    ring: tuple
    material: Material = Material.MATTE


@dataclass(frozen=True)
class FeatureSite:
    p: Point2
    richness: int


@dataclass(frozen=True, eq=False)
class World:
    bounds: tuple
    obstacles: tuple = ()
    feature_sites: tuple = ()
    illumination: Illumination = Illumination.INDOOR
    start: Pose2 = Pose2(0.0, 0.0, 0.0)
    name: str = ""

    @cached_property
    def edges(self) -> np.ndarray:
        """Rows ``x1, y1, x2, y2, obstacle_index (-1 = bounds), reflective``."""
        rows = []
        for a, b in ring_edges(self.bounds):
            rows.append((a[0], a[1], b[0], b[1], -1, 0))
        for k, ob in enumerate(self.obstacles):
            refl = 1 if ob.material is Material.REFLECTIVE else 0
            for a, b in ring_edges(ob.ring):
                rows.append((a[0], a[1], b[0], b[1], k, refl))
        return np.array(rows, dtype=float)

    def in_obstacle(self, p) -> bool:
        return any(point_in_region(p, [ob.ring]) is not Location.OUTSIDE for ob in self.obstacles)

    def in_bounds(self, p) -> bool:
        return point_in_region(p, [self.bounds]) is Location.INSIDE

    def is_free(self, p) -> bool:
        return self.in_bounds(p) and not self.in_obstacle(p)

    @cached_property
    def free_area(self) -> float:
        from .clip import EdgeLabel, LabeledPolygon, PolygonMap, difference, union
        obs = PolygonMap.empty()
        for ob in self.obstacles:
            obs = union(obs, PolygonMap.of(LabeledPolygon.from_ring(ob.ring, EdgeLabel.OBSTACLE)))
        room = PolygonMap.of(LabeledPolygon.from_ring(self.bounds, EdgeLabel.OBSTACLE))
        return difference(room, obs).total_area

    def validate(self) -> None:
        """Raise ``GeometryError`` naming the offending ring."""
        try:
            validate_ring(self.bounds)
        except GeometryError as exc:
            raise GeometryError(f"bounds: {exc}") from None
        for k, ob in enumerate(self.obstacles):
            try:
                validate_ring(ob.ring)
            except GeometryError as exc:
                raise GeometryError(f"obstacle {k}: {exc}") from None
            for v in ob.ring:
                if point_in_region(v, [self.bounds]) is Location.OUTSIDE:
                    raise GeometryError(f"obstacle {k}: vertex {tuple(v)} outside bounds")
        if not self.is_free(self.start.position):
            raise GeometryError("start pose is not in free space")
        segs = self.edges
        for k, s in enumerate(self.feature_sites):
            if s.richness <= 0:
                raise GeometryError(f"feature site {k}: richness must be positive")
            if _distance_to_edges(s.p, segs) > 0.1 + 1e-9:
                raise GeometryError(f"feature site {k}: farther than 0.1 m from any edge")


def _distance_to_edges(p, segs: np.ndarray) -> float:
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    dx, dy = bx - ax, by - ay
    L2 = np.where(dx * dx + dy * dy == 0, 1.0, dx * dx + dy * dy)
    t = np.clip(((p[0] - ax) * dx + (p[1] - ay) * dy) / L2, 0.0, 1.0)
    return float(np.min(np.hypot(p[0] - ax - t * dx, p[1] - ay - t * dy)))


@dataclass(frozen=True, eq=False)
class Scan:
    pose_true: Pose2
    angles: np.ndarray      # sensor frame, strictly increasing, spanning the fov
    ranges: np.ndarray
    hits: tuple             # HitKind per ray
    max_ranges: np.ndarray  # per-ray effective maximum range
    feature_count: int
    timestamp: float = 0.0

    def endpoints(self, pose: Pose2) -> np.ndarray:
        """Ray endpoints in the world frame, placing the sensor at ``pose``."""
        a = pose.theta + self.angles
        return np.column_stack([pose.x + self.ranges * np.cos(a), pose.y + self.ranges * np.sin(a)])

    def same_as(self, other: "Scan") -> bool:
        return (self.pose_true == other.pose_true and self.hits == other.hits
                and self.feature_count == other.feature_count
                and self.timestamp == other.timestamp
                and np.array_equal(self.angles, other.angles)
                and np.array_equal(self.ranges, other.ranges)
                and np.array_equal(self.max_ranges, other.max_ranges))


def ray_distances(ox: float, oy: float, dirs: np.ndarray, segs: np.ndarray,
                  mask: Optional[np.ndarray] = None):
    """Nearest hit of each ray against segments.

    ``dirs`` has shape (R, 2) of unit vectors; ``mask`` (R, S) disables
    segments per ray.  Returns ``(distance, segment_index)`` with ``inf`` / -1
    for rays that hit nothing.
    """
    ux, uy = dirs[:, 0:1], dirs[:, 1:2]
    ax, ay = segs[None, :, 0], segs[None, :, 1]
    ex, ey = segs[None, :, 2] - ax, segs[None, :, 3] - ay
    denom = ux * ey - uy * ex
    wx, wy = ax - ox, ay - oy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (wx * ey - wy * ex) / denom
        s = (wx * uy - wy * ux) / denom
    ok = (denom != 0) & (t > 1e-9) & (s >= 0.0) & (s <= 1.0)
    if mask is not None:
        ok &= mask
    t = np.where(ok, t, np.inf)
    idx = np.argmin(t, axis=1)
    d = t[np.arange(len(dirs)), idx]
    idx = np.where(np.isfinite(d), idx, -1)
    return d, idx


def effective_max_range(cfg: SensorConfig, illum: Illumination, rng, size=None):
    """Per-ray maximum range drawn uniformly from the lighting band."""
    lo, hi = cfg.band(illum)
    return rng.uniform(lo, hi, size)


def dropout(d, eff_max, cfg: SensorConfig):
    """Probability that a return at distance ``d`` is lost (quadratic ramp)."""
    r = np.asarray(d, dtype=float) / np.asarray(eff_max, dtype=float)
    p = cfg.dropout_base + (cfg.dropout_near_limit - cfg.dropout_base) * r * r
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def active_illumination(world: World, cfg: SensorConfig) -> Illumination:
    return cfg.illumination if cfg.illumination is not None else world.illumination


def count_features(pose: Pose2, world: World, cfg: SensorConfig, rng) -> int:
    """Summed richness of visible feature sites plus Poisson clutter."""
    total = 0
    if world.feature_sites:
        sites = np.array([s.p for s in world.feature_sites], dtype=float)
        rich = np.array([s.richness for s in world.feature_sites], dtype=np.int64)
        dx, dy = sites[:, 0] - pose.x, sites[:, 1] - pose.y
        dist = np.hypot(dx, dy)
        bearing = np.arctan2(dy, dx) - pose.theta
        bearing = (bearing + np.pi) % (2 * np.pi) - np.pi
        _, hi = cfg.band(active_illumination(world, cfg))
        cand = (np.abs(bearing) <= 0.5 * cfg.fov) & (dist <= hi) & (dist > 0)
        if cand.any():
            k = np.flatnonzero(cand)
            dirs = np.column_stack([dx[k] / dist[k], dy[k] / dist[k]])
            d, _ = ray_distances(pose.x, pose.y, dirs, world.edges)
            # sites sit on or within 0.1 m of a surface; anything nearer than that blocks
            visible = d >= dist[k] - 0.15
            total = int(rich[k][visible].sum())
    if cfg.clutter_rate > 0:
        total += int(rng.poisson(cfg.clutter_rate))
    return total


def _ghost_legs(hit_pts: np.ndarray, dirs: np.ndarray, hit_seg: np.ndarray,
                world: World, mode: str) -> np.ndarray:
    """Length of the second leg after a reflective surface (inf if it escapes)."""
    segs = world.edges
    obst = segs[:, 4]
    out = np.full(len(hit_pts), np.inf)
    for k in range(len(hit_pts)):
        s = int(hit_seg[k])
        if mode == "transmit":
            d2 = dirs[k:k + 1]
            mask = (obst != obst[s])[None, :]
        else:
            ex, ey = segs[s, 2] - segs[s, 0], segs[s, 3] - segs[s, 1]
            L = math.hypot(ex, ey)
            nx, ny = -ey / L, ex / L
            u = dirs[k]
            dot = u[0] * nx + u[1] * ny
            d2 = np.array([[u[0] - 2 * dot * nx, u[1] - 2 * dot * ny]])
            mask = (np.arange(len(segs)) != s)[None, :]
        d, _ = ray_distances(hit_pts[k, 0], hit_pts[k, 1], d2, segs, mask)
        out[k] = d[0]
    return out


def cast_scan(pose: Pose2, world: World, cfg: SensorConfig, rng, timestamp: float = 0.0) -> Scan:
    """Simulate one scan from ``pose``.

    Random draws happen in a fixed order and count (max ranges, noise,
    dropout, ghost, clutter) so identical seeds give identical scans.
    """
    if not world.in_bounds(pose.position):
        raise PoseInObstacle("pose lies outside the world bounds")
    if world.in_obstacle(pose.position):
        raise PoseInObstacle("pose lies inside an obstacle")
    n = cfg.num_rays
    illum = active_illumination(world, cfg)
    half = 0.5 * cfg.fov
    angles = np.linspace(-half, half, n)
    world_ang = pose.theta + angles
    dirs = np.column_stack([np.cos(world_ang), np.sin(world_ang)])

    eff_max = effective_max_range(cfg, illum, rng, n)
    noise = np.clip(rng.standard_normal(n), -3.0, 3.0) * cfg.range_noise_sigma
    u_drop = rng.random(n)
    u_ghost = rng.random(n)

    d, seg = ray_distances(pose.x, pose.y, dirs, world.edges)
    path = d.copy()
    ghost = np.zeros(n, dtype=bool)
    refl = (seg >= 0) & (world.edges[np.maximum(seg, 0), 5] == 1) & (d <= eff_max)
    if refl.any() and cfg.ghost_gain > 0:
        k = np.flatnonzero(refl)
        pts = np.column_stack([pose.x + d[k] * dirs[k, 0], pose.y + d[k] * dirs[k, 1]])
        total = d[k] + _ghost_legs(pts, dirs[k], seg[k], world, cfg.ghost_mode)
        take = (u_ghost[k] < cfg.ghost_gain) & (total <= eff_max[k])
        ghost[k[take]] = True
        path[k[take]] = total[take]

    ranges = np.empty(n)
    hits = []
    p_drop = dropout(np.minimum(path, eff_max), eff_max, cfg)
    for i in range(n):
        if not (d[i] <= eff_max[i]):
            ranges[i] = eff_max[i]
            hits.append(HitKind.MAX_RANGE)
        elif d[i] < cfg.min_range or u_drop[i] < p_drop[i]:
            ranges[i] = path[i]
            hits.append(HitKind.DROPOUT)
        else:
            ranges[i] = max(path[i] + noise[i], 1e-3)
            hits.append(HitKind.GHOST_HIT if ghost[i] else HitKind.OBSTACLE_HIT)

    feats = count_features(pose, world, cfg, rng)
    for arr in (angles, ranges, eff_max):
        arr.setflags(write=False)
    return Scan(pose, angles, ranges, tuple(hits), eff_max, feats, timestamp)


def make_world(bounds, obstacles=(), feature_sites=(), illumination=Illumination.INDOOR,
               start=(0.0, 0.0, 0.0), name="") -> World:
    """Convenience constructor from plain coordinate lists."""
    def ring(pts):
        r = tuple(Point2(float(x), float(y)) for x, y in pts)
        return r if signed_area(r) > 0 else tuple(reversed(r))

    obs = []
    for ob in obstacles:
        if isinstance(ob, Obstacle):
            obs.append(Obstacle(ring(ob.ring), Material(ob.material)))
        else:
            pts, mat = ob if len(ob) == 2 and isinstance(ob[1], (str, Material)) else (ob, Material.MATTE)
            obs.append(Obstacle(ring(pts), Material(mat)))
    sites = tuple(s if isinstance(s, FeatureSite) else FeatureSite(Point2(*s[0]), int(s[1]))
                  for s in feature_sites)
    return World(ring(bounds), tuple(obs), sites, Illumination(illumination),
                 Pose2(*start), name)
