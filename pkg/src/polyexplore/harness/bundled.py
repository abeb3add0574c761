"""The bundled reference worlds.

* ``yard.json``: an outdoor scene in evening light; a barrel 1 m in front of
  the start pose, a chair at 2 m, flowers at 3 m and trees/objects spread
  between 4 and 15 m.
* ``room.json``: an empty 6 x 6 m room.
* ``corridor_loop.json``: a 1.5 m wide corridor running around a central
  block, for loop-closure experiments.
* ``glass_wall.json``: a room split by a reflective wall with a box behind it.
"""

from __future__ import annotations

import math
from pathlib import Path

from ..sensor import Illumination, Material, World, make_world
from .world_io import save_world


def regular_polygon(cx, cy, r, n=12, phase=0.0):
    return [(round(cx + r * math.cos(phase + 2 * math.pi * k / n), 6),
             round(cy + r * math.sin(phase + 2 * math.pi * k / n), 6)) for k in range(n)]


def box(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def wall_sites(ring, spacing, richness, inset=0.05):
    """Feature sites every ``spacing`` m along a CCW ring, ``inset`` m inside it."""
    sites = []
    n = len(ring)
    for i in range(n):
        (ax, ay), (bx, by) = ring[i], ring[(i + 1) % n]
        L = math.hypot(bx - ax, by - ay)
        ux, uy = (bx - ax) / L, (by - ay) / L
        k = 1
        while k * spacing < L - 1e-9:
            s = k * spacing
            # left of a CCW edge is the interior
            sites.append(((round(ax + s * ux - inset * uy, 6), round(ay + s * uy + inset * ux, 6)),
                          richness))
            k += 1
    return sites


def yard() -> World:
    obstacles = [
        (regular_polygon(1.3, 0.0, 0.3), Material.MATTE),          # barrel, nearest point at 1.0 m
        (box(2.0, -0.3, 2.5, 0.2), Material.MATTE),                 # chair
        (regular_polygon(3.25, 0.9, 0.25, n=8), Material.MATTE),  # flower pot
    ]
    trees = [(4.5, -2.0), (6.0, 2.5), (7.5, -4.0), (9.0, 0.5), (10.5, 5.0),
             (12.0, -1.5), (13.0, 3.5), (14.2, -5.0), (15.0, 0.0)]
    for x, y in trees:
        obstacles.append((regular_polygon(x, y, 0.3, n=10), Material.MATTE))
    bounds = box(-5.0, -9.0, 17.0, 9.0)
    sites = wall_sites(bounds, 2.0, 6)
    sites += [((1.3, 0.32), 15), ((2.25, 0.25), 10), ((3.25, 1.18), 10)]
    sites += [((x - 0.33, y), 8) for x, y in trees]
    return make_world(bounds, obstacles, sites, Illumination.EVENING, (0.0, 0.0, 0.0), "yard")


def room() -> World:
    bounds = box(0.0, 0.0, 6.0, 6.0)
    return make_world(bounds, (), wall_sites(bounds, 1.0, 10), Illumination.INDOOR,
                      (3.0, 3.0, 0.0), "room")


def corridor_loop() -> World:
    bounds = box(0.0, 0.0, 12.0, 10.0)
    block = box(1.5, 1.5, 10.5, 8.5)
    sites = wall_sites(bounds, 1.0, 8)
    # the block ring is CW seen from the corridor, so place its sites by hand
    sites += [((x, 1.45), 8) for x in range(2, 11)] + [((x, 8.55), 8) for x in range(2, 11)]
    sites += [((1.45, y), 8) for y in range(2, 9)] + [((10.55, y), 8) for y in range(2, 9)]
    return make_world(bounds, [(block, Material.MATTE)], sites, Illumination.INDOOR,
                      (0.75, 0.75, 0.0), "corridor_loop")


def glass_wall() -> World:
    bounds = box(0.0, 0.0, 8.0, 6.0)
    glass = box(5.0, 0.0, 5.05, 6.0)
    target = box(6.5, 2.5, 7.0, 3.5)
    sites = [s for s in wall_sites(bounds, 1.0, 10) if s[0][0] < 5.0]
    return make_world(bounds, [(glass, Material.REFLECTIVE), (target, Material.MATTE)], sites,
                      Illumination.INDOOR, (2.0, 3.0, 0.0), "glass_wall")


BUNDLED_WORLDS = {
    "yard": yard,
    "room": room,
    "corridor_loop": corridor_loop,
    "glass_wall": glass_wall,
}


def build_paper_worlds(out_dir) -> list:
    """Write every bundled world into ``out_dir``; returns the paths written."""
    out_dir = Path(out_dir)
    paths = []
    for name, make in BUNDLED_WORLDS.items():
        p = out_dir / f"{name}.json"
        save_world(make(), p)
        paths.append(p)
    return paths
