import math

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from polyexplore.clip import EdgeLabel, LabeledPolygon, PolygonMap
from polyexplore.geom import point_segment_distance
from polyexplore.planner import (StartOutsideMap, clearance_of, goal_candidates, inside_map, path_length,
                                 plan_path, segment_clearance, segments_clear)

L_RING = [(0, 0), (6, 0), (6, 2), (2, 2), (2, 6), (0, 6)]


def pmap_of(ring, holes=()):
    n = len(ring)
    return PolygonMap.of(LabeledPolygon(tuple(ring), (EdgeLabel.OBSTACLE,) * n, tuple(holes),
                                        tuple((EdgeLabel.OBSTACLE,) * len(h) for h in holes)))


def _edges(ring):
    return [(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring))]


def _clear(p, edges):
    return min(point_segment_distance(p, a, b) for a, b in edges)


def grid_shortest(ring, start, goal, clearance, h=0.1):
    """16-connected grid search over cells with enough clearance (brute force)."""
    edges = _edges(ring)
    m = pmap_of(ring)
    xs = np.arange(0, 6 + 1e-9, h)
    pts = np.array([(x, y) for x in xs for y in xs])
    ok = inside_map(m, pts) & np.array([_clear(p, edges) >= clearance for p in pts])
    index = {}
    for k, p in enumerate(pts):
        if ok[k]:
            index[(round(p[0] / h), round(p[1] / h))] = len(index)
    nodes = np.array([(i * h, j * h) for i, j in index])
    moves = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)]
    rows, cols, w = [], [], []
    for (i, j), a in index.items():
        for di, dj in moves:
            b = index.get((i + di, j + dj))
            if b is None:
                continue
            p, q = nodes[a], nodes[b]
            mids = [p + t * (q - p) for t in np.linspace(0, 1, 9)]
            if all(_clear(mm, edges) >= clearance - 1e-9 for mm in mids):
                rows.append(a), cols.append(b), w.append(math.dist(p, q))
    g = coo_matrix((w, (rows, cols)), shape=(len(nodes), len(nodes))).tocsr()
    s = index[(round(start[0] / h), round(start[1] / h))]
    t = index[(round(goal[0] / h), round(goal[1] / h))]
    return dijkstra(g, directed=False, indices=s)[t]


def test_direct_visibility_two_points():
    m = pmap_of(L_RING)
    path = plan_path(m, (0.5, 0.5), (4.0, 1.0), 0.25, 0.05)
    assert len(path) == 2
    assert path_length(path) == pytest.approx(math.dist((0.5, 0.5), (4.0, 1.0)))


def test_l_shape_against_grid_search():
    m = pmap_of(L_RING)
    c = 0.25
    for start, goal in [((5.0, 1.0), (1.0, 5.0)), ((5.5, 0.5), (0.5, 5.5)), ((4.0, 1.5), (1.5, 4.0))]:
        path = plan_path(m, start, goal, c, 0.05)
        assert path is not None and len(path) >= 3
        ref = grid_shortest(L_RING, start, goal, c)
        got = path_length(path)
        assert got > math.dist(start, goal)
        assert abs(got - ref) / ref <= 0.05


def test_path_respects_clearance():
    m = pmap_of(L_RING)
    c = 0.3
    path = plan_path(m, (5.0, 1.0), (1.0, 5.0), c, 0.05)
    edges = np.array([[a, b] for a, b in _edges(L_RING)], dtype=float).reshape(-1, 4)
    for p, q in zip(path, path[1:]):
        assert segment_clearance(np.array(p), np.array(q), edges, 2 * c)[0] >= c - 1e-6


def test_unreachable_goal():
    # two rooms joined by a gap narrower than twice the clearance
    ring = [(0, 0), (3, 0), (3, 1.4), (3.5, 1.4), (3.5, 0), (6, 0), (6, 3), (3.5, 3), (3.5, 1.6),
            (3, 1.6), (3, 3), (0, 3)]
    m = pmap_of(ring)
    assert plan_path(m, (1.0, 1.5), (5.0, 1.5), 0.25, 0.05) is None
    assert plan_path(m, (1.0, 1.5), (5.0, 1.5), 0.05, 0.05) is not None


def test_goal_on_boundary_is_approached_within_tolerance():
    m = pmap_of(L_RING)
    goal = (6.0, 1.0)  # on the map boundary: not itself clear
    path = plan_path(m, (1.0, 1.0), goal, 0.25, 0.6)
    end = path[-1]
    assert math.dist(end, goal) <= 0.6 + 1e-9
    assert clearance_of(np.array(end), np.array([[a, b] for a, b in _edges(L_RING)], float).reshape(-1, 4))[0] >= 0.25


def test_start_outside_map():
    with pytest.raises(StartOutsideMap):
        plan_path(pmap_of(L_RING), (4.0, 4.0), (1.0, 1.0))
    with pytest.raises(StartOutsideMap):
        plan_path(PolygonMap.empty(), (0.0, 0.0), (1.0, 1.0))


def test_hole_is_avoided():
    outer = [(0, 0), (6, 0), (6, 4), (0, 4)]
    hole = [(2, 1), (2, 3), (4, 3), (4, 1)]
    m = pmap_of(outer, [hole])
    path = plan_path(m, (1.0, 2.0), (5.0, 2.0), 0.25, 0.05)
    assert path is not None and len(path) >= 3
    assert path_length(path) > 4.0


def test_goal_candidates_prefer_standoff():
    pts, keys = goal_candidates((0.0, 0.0), 1.0, 0.25, standoff=0.8)
    assert keys[0] == pytest.approx(0.0, abs=1e-9)
    assert math.hypot(*pts[0]) == pytest.approx(0.8)
    assert np.all(np.diff(keys) >= 0)
    pts, keys = goal_candidates((0.0, 0.0), 1.0, 0.25)
    assert tuple(pts[0]) == (0.0, 0.0)


def test_segments_clear_matches_sampled_clearance():
    rng = np.random.default_rng(3)
    edges = np.array([[a, b] for a, b in _edges(L_RING)], float).reshape(-1, 4)
    p = rng.uniform(0, 6, (200, 2))
    q = rng.uniform(0, 6, (200, 2))
    fast = segments_clear(p, q, edges, 0.25)
    exact = segment_clearance(p, q, edges, 1.0) >= 0.25
    assert np.array_equal(fast, exact)
