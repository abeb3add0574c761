import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from polyexplore.clip import PolygonMap
from polyexplore.geom import point_segment_distance
from polyexplore.harness import BUNDLED_WORLDS, build_paper_worlds, render_svg
from polyexplore.harness.cli import main
from polyexplore.harness.config import (ConfigError, apply_overrides, config_from_dict, config_to_dict,
                                        default_config_dict, parse_value)
from polyexplore.harness.output import read_metrics, read_trace
from polyexplore.harness.world_io import (InputError, load_scenario, load_world, save_world,
                                          scenario_from_dict, world_from_dict, world_to_dict)
from polyexplore.sensor import Illumination, Material

REPO = Path(__file__).resolve().parents[1]
SCENARIOS = REPO / "scenarios"


def small_world_doc():
    return {"schema": 1, "name": "box", "start": [1.0, 1.0, 0.0],
            "bounds": [[0, 0], [3, 0], [3, 2.5], [0, 2.5]],
            "obstacles": [{"ring": [[2, 1.5], [2.5, 1.5], [2.5, 2], [2, 2]], "material": "Matte"}],
            "feature_sites": [{"p": [0.05, 1.0], "richness": 40}],
            "illumination": "Indoor"}


@pytest.fixture
def small_scenario(tmp_path):
    (tmp_path / "box.json").write_text(json.dumps(small_world_doc()))
    doc = {"schema": 1, "name": "box", "world": "box.json", "seed": 4, "step_budget": 150, "overrides": {}}
    path = tmp_path / "box_scenario.json"
    path.write_text(json.dumps(doc))
    return path


# -- configuration -----------------------------------------------------------

def test_config_roundtrip_and_overrides():
    doc = default_config_dict()
    assert config_to_dict(config_from_dict(doc)) == doc
    new = apply_overrides(doc, {"sensor.illumination": "Shadow", "slam.gamma_loop": 0.5})
    cfg = config_from_dict(new)
    assert cfg.sensor.illumination is Illumination.SHADOW and cfg.slam.gamma_loop == 0.5
    assert doc["slam"]["gamma_loop"] == 0.9  # input untouched


def test_config_rejects_unknown_and_mistyped():
    doc = default_config_dict()
    with pytest.raises(ConfigError):
        apply_overrides(doc, {"sensor.colour": 1})
    with pytest.raises(ConfigError):
        apply_overrides(doc, {"warp.speed": 1})
    with pytest.raises(ConfigError):
        apply_overrides(doc, {"slam.loop_closure": "yes"})
    with pytest.raises(ConfigError):
        config_from_dict({**doc, "extra": {}})
    with pytest.raises((ConfigError, ValueError)):
        config_from_dict(apply_overrides(doc, {"sensor.ghost_gain": 2.0}))


def test_parse_value():
    assert parse_value("0.5") == 0.5
    assert parse_value("false") is False
    assert parse_value("Shadow") == "Shadow"


# -- worlds and scenarios --------------------------------------------------------

def test_world_roundtrip(tmp_path):
    w = world_from_dict(small_world_doc())
    save_world(w, tmp_path / "w.json")
    back = load_world(tmp_path / "w.json")
    assert world_to_dict(back) == world_to_dict(w)
    assert back.free_area == pytest.approx(3 * 2.5 - 0.25)


def test_world_validation_messages():
    doc = small_world_doc()
    doc["obstacles"].append({"ring": [[0.5, 0.5], [1, 1], [1, 0.5], [0.5, 1]]})
    with pytest.raises(InputError, match="obstacle 1"):
        world_from_dict(doc)
    doc = small_world_doc()
    doc["colour"] = "red"
    with pytest.raises(InputError, match="colour"):
        world_from_dict(doc)
    doc = small_world_doc()
    doc["schema"] = 2
    with pytest.raises(InputError):
        world_from_dict(doc)
    doc = small_world_doc()
    doc["start"] = [2.2, 1.7, 0.0]  # inside the obstacle
    with pytest.raises(InputError):
        world_from_dict(doc)


def test_scenario_validation(tmp_path):
    (tmp_path / "box.json").write_text(json.dumps(small_world_doc()))
    good = {"schema": 1, "name": "s", "world": "box.json", "seed": 1, "step_budget": 10, "overrides": {}}
    sc = scenario_from_dict(good, tmp_path)
    assert sc.world().name == "box"
    assert sc.run_config({}).explore.step_budget == 10
    for bad in ({"seed": -1}, {"seed": 2 ** 64}, {"step_budget": 0}, {"overrides": {"sensor.nope": 1}},
                {"extra": 1}, {"overrides": {"sensor.fov_deg": "wide"}}):
        with pytest.raises(InputError):
            scenario_from_dict({**good, **bad}, tmp_path)


def test_bundled_scenarios_load():
    names = sorted(p.stem for p in SCENARIOS.glob("*.json"))
    assert names == ["brightsun_room", "corridor_loop", "glass_wall", "indoor_room", "shadow_room",
                     "yard_evening"]
    for p in SCENARIOS.glob("*.json"):
        sc = load_scenario(p)
        sc.run_config({})
        sc.world().validate()


def test_bundled_worlds_match_builders(tmp_path):
    build_paper_worlds(tmp_path)
    for name in BUNDLED_WORLDS:
        assert json.loads((tmp_path / f"{name}.json").read_text()) == \
            json.loads((SCENARIOS / "worlds" / f"{name}.json").read_text())


def test_bundled_world_facts():
    yard = BUNDLED_WORLDS["yard"]()
    assert yard.illumination is Illumination.EVENING
    start = yard.start.position
    nearest = min(min(point_segment_distance(start, a, b) for a, b in zip(ob.ring, ob.ring[1:] + ob.ring[:1]))
                  for ob in yard.obstacles)
    assert nearest == pytest.approx(1.0, abs=0.05)
    glass = BUNDLED_WORLDS["glass_wall"]()
    assert sum(ob.material is Material.REFLECTIVE for ob in glass.obstacles) == 1
    assert BUNDLED_WORLDS["room"]().free_area == pytest.approx(36.0)


# -- outputs -------------------------------------------------------------------

def test_svg_is_deterministic_and_scaled():
    w = BUNDLED_WORLDS["room"]()
    a = render_svg(PolygonMap.empty(), w)
    b = render_svg(PolygonMap.empty(), w)
    assert a == b and a.startswith("<svg")
    assert 'width="640' in a  # 6 m at 100 px/m plus two 20 px margins


# -- command line ----------------------------------------------------------------

def test_cli_run_writes_artifacts(small_scenario, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(small_scenario), "--out", str(out), "--quiet"]) == 0
    for f in ("trace.jsonl", "metrics.csv", "map_final.svg", "map_final.json"):
        assert (out / f).is_file()
    trace = read_trace(out / "trace.jsonl")
    assert trace and {"sim_time", "true_pose", "est_pose", "event"} <= set(trace[0])
    rows = read_metrics(out / "metrics.csv")
    assert len(rows) == 1 and rows[0]["scenario"] == "box" and rows[0]["seed"] == "4"
    # a second run with the same seed is byte-identical
    out2 = tmp_path / "out2"
    assert main(["run", str(small_scenario), "--out", str(out2), "--quiet"]) == 0
    assert (out / "trace.jsonl").read_bytes() == (out2 / "trace.jsonl").read_bytes()


def test_cli_sweep_rows(small_scenario, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", str(small_scenario), "--param", "sensor.illumination",
                 "--values", "Indoor,Shadow,BrightSun", "--out", str(out), "--quiet"])
    assert code == 0
    with open(out / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 and all(r["seed"] == "4" for r in rows)
    assert len(list(out.glob("run_*/trace.jsonl"))) == 3


def test_cli_validate_and_exit_codes(tmp_path):
    assert main(["validate", str(SCENARIOS / "worlds" / "room.json"), "--quiet"]) == 0
    doc = small_world_doc()
    doc["obstacles"][0]["ring"] = [[0.5, 0.5], [1, 1], [1, 0.5], [0.5, 1]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad), "--quiet"]) == 1
    assert main(["validate", str(tmp_path / "missing.json"), "--quiet"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["run", str(bad), "--seed", "-3", "--quiet"]) == 1


def test_cli_reports_ring_index(tmp_path, capsys):
    doc = small_world_doc()
    doc["obstacles"].insert(0, {"ring": [[0.2, 0.2], [0.4, 0.2], [0.4, 0.4], [0.2, 0.4]]})
    doc["obstacles"][1]["ring"] = [[2, 1.5], [2.5, 2], [2.5, 1.5], [2, 2]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad)]) == 1
    assert "obstacle 1" in capsys.readouterr().err


def test_cli_oracle_clip(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps({"rings": [[[0, 0], [1, 0], [1, 1], [0, 1]]]}))
    b.write_text(json.dumps({"rings": [[[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]]]}))
    assert main(["oracle-clip", str(a), str(b), "--op", "union", "--samples", "200000", "--quiet"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["clip_area"] == pytest.approx(1.75)
    assert res["rel_error"] < 0.01
