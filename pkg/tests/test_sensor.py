import math

import numpy as np
import pytest

from polyexplore.geom import Pose2
from polyexplore.sensor import (HitKind, Illumination, Material, PoseInObstacle, SensorConfig,
                                cast_scan, count_features, dropout, effective_max_range, make_world)


def quiet(**kw):
    base = dict(range_noise_sigma=0.0, dropout_base=0.0, dropout_near_limit=0.0, ghost_gain=0.0,
                clutter_rate=0.0)
    base.update(kw)
    return SensorConfig(**base)


def wall_world(d, illum=Illumination.INDOOR, half_width=50.0):
    """Robot at the origin facing +x, a matte wall ``d`` meters ahead."""
    bounds = [(-60, -60), (60, -60), (60, 60), (-60, 60)]
    wall = [(d, -half_width), (d + 0.5, -half_width), (d + 0.5, half_width), (d, half_width)]
    return make_world(bounds, [wall], illumination=illum)


def test_effective_max_range_bands():
    cfg = SensorConfig()
    rng = np.random.default_rng(0)
    for illum, (lo, hi) in [(Illumination.BRIGHT_SUN, (1.2, 2.4)), (Illumination.SHADOW, (3.5, 6.0)),
                            (Illumination.EVENING, (11.0, 12.0))]:
        v = effective_max_range(cfg, illum, rng, 5000)
        assert v.min() >= lo and v.max() <= hi
        assert v.max() - v.min() > 0.9 * (hi - lo)


def test_dropout_formula():
    cfg = SensorConfig(dropout_base=0.02, dropout_near_limit=0.5)
    assert dropout(1.0, 2.0, cfg) == pytest.approx(0.14)
    assert dropout(1e-9, 2.0, cfg) == pytest.approx(0.02)
    assert dropout(2.0, 2.0, cfg) == pytest.approx(0.5)


def test_empty_room_all_max_range():
    w = make_world([(-20, -20), (20, -20), (20, 20), (-20, 20)])
    s = cast_scan(Pose2(0, 0, 0), w, quiet(), np.random.default_rng(1))
    assert all(h is HitKind.MAX_RANGE for h in s.hits)
    assert np.array_equal(s.ranges, s.max_ranges)


def test_brightsun_wall_distances():
    cfg = quiet(num_rays=141)
    center = 70
    near = cast_scan(Pose2(0, 0, 0), wall_world(1.0, Illumination.BRIGHT_SUN), cfg, np.random.default_rng(2))
    assert near.hits[center] is HitKind.OBSTACLE_HIT and near.ranges[center] == pytest.approx(1.0)
    far = cast_scan(Pose2(0, 0, 0), wall_world(3.0, Illumination.BRIGHT_SUN), cfg, np.random.default_rng(2))
    assert far.hits[center] is HitKind.MAX_RANGE


def test_glass_wall_ghosts():
    bounds = [(-10, -10), (10, -10), (10, 10), (-10, 10)]
    glass = [(2.0, -3), (2.05, -3), (2.05, 3), (2.0, 3)]
    box = [(3.0, -3), (3.5, -3), (3.5, 3), (3.0, 3)]
    w = make_world(bounds, [(glass, Material.REFLECTIVE), (box, Material.MATTE)])
    s = cast_scan(Pose2(0, 0, 0), w, quiet(ghost_gain=1.0, fov_deg=20, num_rays=41), np.random.default_rng(3))
    c = 20
    assert s.hits[c] is HitKind.GHOST_HIT and s.ranges[c] == pytest.approx(3.0)
    s = cast_scan(Pose2(0, 0, 0), w, quiet(ghost_gain=0.5, fov_deg=20, num_rays=41), np.random.default_rng(3))
    kinds = set(s.hits)
    assert HitKind.GHOST_HIT in kinds and HitKind.OBSTACLE_HIT in kinds
    obst = [r for r, h in zip(s.ranges, s.hits) if h is HitKind.OBSTACLE_HIT]
    assert min(obst) == pytest.approx(2.0, abs=0.01)


def test_mirror_mode_reflects():
    bounds = [(-10, -10), (10, -10), (10, 10), (-10, 10)]
    mirror = [(2.0, -3), (2.05, -3), (2.05, 3), (2.0, 3)]
    w = make_world(bounds, [(mirror, Material.REFLECTIVE)])
    s = cast_scan(Pose2(0, 0, 0), w, quiet(ghost_gain=1.0, ghost_mode="mirror", fov_deg=10, num_rays=11),
                  np.random.default_rng(0))
    # straight back: 2 m to the mirror, 12 m to the wall behind the robot -> beyond 8 m indoor range
    assert s.hits[5] is HitKind.OBSTACLE_HIT


def test_pose_in_obstacle_raises():
    w = wall_world(1.0)
    with pytest.raises(PoseInObstacle):
        cast_scan(Pose2(1.2, 0, 0), w, quiet(), np.random.default_rng(0))


def test_count_features():
    bounds = [(-10, -10), (10, -10), (10, 10), (-10, 10)]
    w = make_world(bounds, [[(4, -1), (4.5, -1), (4.5, 1), (4, 1)]],
                   feature_sites=[((3.95, 0.0), 10), ((9.95, 0.0), 7), ((0.0, 9.95), 5)])
    cfg = quiet()
    rng = np.random.default_rng(0)
    # the 7-site is hidden behind the box, the 5-site is outside the view
    assert count_features(Pose2(0, 0, 0), w, cfg, rng) == 10
    assert count_features(Pose2(0, 0, math.pi), w, cfg, rng) == 0
    noisy = SensorConfig(clutter_rate=3.0)
    counts = [count_features(Pose2(0, 0, math.pi), w, noisy, rng) for _ in range(2000)]
    assert np.mean(counts) == pytest.approx(3.0, abs=0.2)


def test_determinism():
    w = wall_world(3.0)
    cfg = SensorConfig()
    a = cast_scan(Pose2(0, 0, 0.1), w, cfg, np.random.default_rng(42), 1.0)
    b = cast_scan(Pose2(0, 0, 0.1), w, cfg, np.random.default_rng(42), 1.0)
    assert a.same_as(b)


def test_angles_span_fov():
    s = cast_scan(Pose2(0, 0, 0), wall_world(3.0), SensorConfig(), np.random.default_rng(0))
    assert s.angles[-1] - s.angles[0] == pytest.approx(math.radians(70.0), abs=1e-9)
    assert np.all(np.diff(s.angles) > 0)
    assert len(s.angles) == 141


def _brute_force_distance(o, u, world):
    """Closed-form ray/segment intersection over every edge, one at a time."""
    best = math.inf
    rings = [world.bounds] + [ob.ring for ob in world.obstacles]
    for ring in rings:
        for k in range(len(ring)):
            a, b = ring[k], ring[(k + 1) % len(ring)]
            e = (b[0] - a[0], b[1] - a[1])
            m = np.array([[u[0], -e[0]], [u[1], -e[1]]])
            if abs(np.linalg.det(m)) < 1e-15:
                continue
            t, s = np.linalg.solve(m, [a[0] - o[0], a[1] - o[1]])
            if t > 1e-9 and -1e-12 <= s <= 1 + 1e-12:
                best = min(best, t)
    return best


def test_ray_distances_vs_brute_force():
    rng = np.random.default_rng(17)
    bounds = [(-8, -8), (8, -8), (8, 8), (-8, 8)]
    obstacles = [[(2, 1), (3, 1.5), (2.5, 3)], [(-4, -1), (-2, -2), (-1, 1), (-3, 0)],
                 [(0, -5), (1, -4), (0.5, -3)]]
    w = make_world(bounds, obstacles, illumination=Illumination.EVENING)
    ranges = dict(SensorConfig().ranges)
    ranges[Illumination.EVENING] = (30.0, 31.0)
    cfg = quiet(num_rays=61, ranges=ranges)
    for _ in range(15):
        while True:
            p = rng.uniform(-7, 7, 2)
            if w.is_free(p):
                break
        pose = Pose2(p[0], p[1], rng.uniform(-math.pi, math.pi))
        s = cast_scan(pose, w, cfg, rng)
        for ang, r, h in zip(s.angles, s.ranges, s.hits):
            if h is not HitKind.OBSTACLE_HIT:
                continue
            u = (math.cos(pose.theta + ang), math.sin(pose.theta + ang))
            assert r == pytest.approx(_brute_force_distance(p, u, w), abs=1e-9)


def test_monotone_illumination_detection():
    cfg = quiet(num_rays=1000, fov_deg=0.5)
    for d in (1.5, 2.0, 4.0, 5.5, 11.5):
        rates = {}
        for illum in (Illumination.BRIGHT_SUN, Illumination.SHADOW, Illumination.EVENING):
            s = cast_scan(Pose2(0, 0, 0), wall_world(d, illum), cfg, np.random.default_rng(int(d * 10)))
            rates[illum] = np.mean([h is HitKind.OBSTACLE_HIT for h in s.hits])
        assert rates[Illumination.EVENING] >= rates[Illumination.SHADOW] >= rates[Illumination.BRIGHT_SUN]


def test_config_validation():
    with pytest.raises(ValueError):
        SensorConfig(fov_deg=0)
    with pytest.raises(ValueError):
        SensorConfig(ghost_gain=1.5)
    with pytest.raises(ValueError):
        SensorConfig(ranges={"Indoor": (5.0, 2.0)})
    with pytest.raises(ValueError):
        SensorConfig(ghost_mode="diffuse")
