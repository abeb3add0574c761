"""World and scenario JSON documents.

World::

    {"schema": 1, "name": "room", "start": [x, y, theta],
     "bounds": [[x, y], ...],
     "obstacles": [{"ring": [[x, y], ...], "material": "Matte"}],
     "feature_sites": [{"p": [x, y], "richness": 10}],
     "illumination": "Indoor"}

Scenario::

    {"schema": 1, "name": "indoor_room", "world": "worlds/room.json",
     "seed": 1, "step_budget": 20000, "overrides": {"sensor.illumination": "Indoor"}}

``world`` is resolved relative to the scenario file.  ``name`` and ``start``
are optional in a world (start defaults to the origin, heading 0).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..explore import RunConfig
from ..geom import GeometryError, validate_ring
from ..sensor import Illumination, Material, World, make_world
from .config import SCHEMA_VERSION, ConfigError, apply_overrides, config_from_dict, default_config_dict

WORLD_KEYS = {"schema", "name", "start", "bounds", "obstacles", "feature_sites", "illumination"}
OBSTACLE_KEYS = {"ring", "material"}
SITE_KEYS = {"p", "richness"}
SCENARIO_KEYS = {"schema", "name", "world", "seed", "step_budget", "overrides"}
U64_MAX = 2 ** 64 - 1


class InputError(ValueError):
    """A document that fails schema or geometry checks."""


def _check_keys(doc, allowed: set, required: set, what: str):
    if not isinstance(doc, dict):
        raise InputError(f"{what} must be a JSON object")
    extra = sorted(set(doc) - allowed)
    if extra:
        raise InputError(f"{what}: unknown key(s) {', '.join(extra)}")
    missing = sorted(required - set(doc))
    if missing:
        raise InputError(f"{what}: missing key(s) {', '.join(missing)}")


def _check_schema(doc, what):
    if doc.get("schema") != SCHEMA_VERSION:
        raise InputError(f"{what}: schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}")


def _points(raw, what):
    try:
        pts = [(float(x), float(y)) for x, y in raw]
    except (TypeError, ValueError):
        raise InputError(f"{what}: expected a list of [x, y] pairs") from None
    if not all(math.isfinite(c) for p in pts for c in p):
        raise InputError(f"{what}: non-finite coordinate")
    return pts


def world_from_dict(doc: dict, validate: bool = True) -> World:
    _check_keys(doc, WORLD_KEYS, {"schema", "bounds"}, "world")
    _check_schema(doc, "world")
    bounds = _points(doc["bounds"], "bounds")
    obstacles = []
    for k, ob in enumerate(doc.get("obstacles", [])):
        _check_keys(ob, OBSTACLE_KEYS, {"ring"}, f"obstacle {k}")
        ring = _points(ob["ring"], f"obstacle {k}")
        try:
            mat = Material(ob.get("material", Material.MATTE.value))
        except ValueError:
            raise InputError(f"obstacle {k}: unknown material {ob.get('material')!r}") from None
        obstacles.append((ring, mat))
    sites = []
    for k, s in enumerate(doc.get("feature_sites", [])):
        _check_keys(s, SITE_KEYS, SITE_KEYS, f"feature site {k}")
        p = _points([s["p"]], f"feature site {k}")[0]
        if isinstance(s["richness"], bool) or not isinstance(s["richness"], int):
            raise InputError(f"feature site {k}: richness must be an integer")
        sites.append((p, s["richness"]))
    try:
        illum = Illumination(doc.get("illumination", Illumination.INDOOR.value))
    except ValueError:
        raise InputError(f"unknown illumination {doc.get('illumination')!r}") from None
    start = doc.get("start", [0.0, 0.0, 0.0])
    if not (isinstance(start, list) and len(start) == 3 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
            for v in start)):
        raise InputError("start must be [x, y, theta]")
    if validate:
        # check rings as written, before orientation is normalized
        for what, ring in [("bounds", bounds)] + [(f"obstacle {k}", r) for k, (r, _) in enumerate(obstacles)]:
            try:
                validate_ring(ring)
            except GeometryError as exc:
                raise InputError(f"{what}: {exc}") from None
    world = make_world(bounds, obstacles, sites, illum, tuple(start), str(doc.get("name", "")))
    if validate:
        try:
            world.validate()
        except GeometryError as exc:
            raise InputError(str(exc)) from None
    return world


def world_to_dict(world: World) -> dict:
    doc = {"schema": SCHEMA_VERSION}
    if world.name:
        doc["name"] = world.name
    doc["start"] = [world.start.x, world.start.y, world.start.theta]
    doc["bounds"] = [[p.x, p.y] for p in world.bounds]
    doc["obstacles"] = [{"ring": [[p.x, p.y] for p in ob.ring], "material": ob.material.value}
                        for ob in world.obstacles]
    doc["feature_sites"] = [{"p": [s.p.x, s.p.y], "richness": s.richness} for s in world.feature_sites]
    doc["illumination"] = world.illumination.value
    return doc


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_world(path, validate: bool = True) -> World:
    return world_from_dict(_read_json(path), validate)


def write_json(path, doc) -> None:
    """Write ``doc`` atomically with stable formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def save_world(world: World, path) -> None:
    write_json(path, world_to_dict(world))


@dataclass
class Scenario:
    name: str
    world_file: Path
    seed: int = 0
    step_budget: int = 100_000
    overrides: dict = field(default_factory=dict)

    def world(self) -> World:
        return load_world(self.world_file)

    def run_config(self, extra: dict = None) -> RunConfig:
        doc = apply_overrides(default_config_dict(), self.overrides)
        if extra:
            doc = apply_overrides(doc, extra)
        doc["explore"]["step_budget"] = self.step_budget
        return config_from_dict(doc)


def scenario_from_dict(doc: dict, base_dir=".") -> Scenario:
    _check_keys(doc, SCENARIO_KEYS, {"schema", "name", "world"}, "scenario")
    _check_schema(doc, "scenario")
    if not isinstance(doc["name"], str) or not doc["name"]:
        raise InputError("scenario: name must be a non-empty string")
    world_file = Path(base_dir) / doc["world"]
    if not world_file.is_file():
        raise InputError(f"scenario: world file {world_file} does not exist")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= U64_MAX:
        raise InputError("scenario: seed must be an unsigned 64-bit integer")
    budget = doc.get("step_budget", 100_000)
    if isinstance(budget, bool) or not isinstance(budget, int) or budget <= 0:
        raise InputError("scenario: step_budget must be a positive integer")
    overrides = doc.get("overrides", {})
    if not isinstance(overrides, dict):
        raise InputError("scenario: overrides must be an object")
    sc = Scenario(doc["name"], world_file, seed, budget, dict(overrides))
    try:
        sc.run_config()  # type-check overrides now rather than mid-run
    except ConfigError as exc:
        raise InputError(f"scenario: {exc}") from None
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    return scenario_from_dict(_read_json(path), path.parent)
