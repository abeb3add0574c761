"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..clip import BoolOp, DegenerateInput, EdgeLabel, LabeledPolygon, PolygonMap, boolean_op, map_from_dict, map_to_dict
from ..explore import compute_metrics, run_exploration
from ..geom import GeometryError
from ..mapper import extract_frontiers
from ..oracle import raster_areas
from .config import ConfigError, parse_value
from .output import metrics_row, write_metrics, write_text, write_trace
from .bundled import build_paper_worlds
from .svg import render_svg
from .world_io import InputError, load_scenario, load_world, _read_json, write_json

log = logging.getLogger("polyexplore")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2


def _run_one(scenario, seed: int, extra: dict, out_dir: Path, label: str):
    """Execute one run and write its artifacts; returns the metrics CSV row."""
    world = scenario.world()
    cfg = scenario.run_config(extra)
    pmap, trace = run_exploration(world, cfg, seed=seed)
    metrics = compute_metrics(trace, world)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trace(out_dir / "trace.jsonl", trace)
    frontiers = extract_frontiers(pmap, cfg.explore.min_frontier_length)
    write_text(out_dir / "map_final.svg", render_svg(pmap, world, frontiers, trace))
    write_json(out_dir / "map_final.json", map_to_dict(pmap))
    row = metrics_row(label, seed, metrics)
    write_metrics(out_dir / "metrics.csv", [row])
    return row, trace[-1].event.value


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    seed = sc.seed if args.seed is None else args.seed
    out = Path(args.out)
    row, end = _run_one(sc, seed, {}, out, sc.name)
    log.info("%s: %s after %s steps, coverage %s -> %s", sc.name, end, row[6], row[2], out)
    return EXIT_OK


def _sweep_job(job):
    scenario_path, seed, param, value, out_dir, label = job
    sc = load_scenario(scenario_path)
    return _run_one(sc, seed, {param: value}, Path(out_dir), label)


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    seed = sc.seed if args.seed is None else args.seed
    values = [parse_value(v) for chunk in args.values for v in chunk.split(",") if v != ""]
    if not values:
        raise InputError("--values needs at least one value")
    for v in values:  # reject bad keys/types before running anything
        try:
            sc.run_config({args.param: v})
        except ConfigError as exc:
            raise InputError(str(exc)) from None
    out = Path(args.out)
    jobs = []
    for k, v in enumerate(values):
        label = f"{sc.name}[{args.param}={v}]"
        # every run uses the scenario seed so runs are paired across values
        jobs.append((str(args.scenario), seed, args.param, v, str(out / f"run_{k:03d}"), label))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    rows = [r for r, _ in results]
    write_metrics(out / "metrics.csv", rows)
    for (row, end) in results:
        log.info("%s: %s, coverage %s, t90 %s", row[0], end, row[2], row[5])
    return EXIT_OK


def cmd_validate(args) -> int:
    world = load_world(args.world)
    log.info("%s: ok (%d obstacles, free area %.3f m^2)", args.world, len(world.obstacles), world.free_area)
    return EXIT_OK


def _load_polygons(path) -> PolygonMap:
    """A map dump (``polygons``) or ``{"schema": 1, "rings": [outer, hole, ...]}``."""
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    try:
        if "polygons" in doc:
            return map_from_dict(doc)
        if "rings" in doc:
            rings = [[tuple(map(float, p)) for p in r] for r in doc["rings"]]
            if not rings:
                raise ValueError("no rings")
            holes = rings[1:]
            poly = LabeledPolygon(tuple(rings[0]), (EdgeLabel.FREE,) * len(rings[0]),
                                  tuple(map(tuple, holes)),
                                  tuple((EdgeLabel.FREE,) * len(h) for h in holes))
            return PolygonMap.of(poly)
    except (DegenerateInput, GeometryError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    raise InputError(f"{path}: expected 'polygons' or 'rings'")


def cmd_oracle_clip(args) -> int:
    a, b = _load_polygons(args.a), _load_polygons(args.b)
    op = BoolOp(args.op)
    res = boolean_op(a, b, op)
    est = raster_areas(a.rings(), b.rings(), samples=args.samples, seed=args.seed or 0)
    key = {BoolOp.UNION: "union", BoolOp.INTERSECTION: "intersection", BoolOp.DIFFERENCE: "difference"}[op]
    ref = est[key]
    rel = abs(res.total_area - ref) / max(ref, 1e-12)
    print(json.dumps({"op": key, "clip_area": res.total_area, "oracle_area": ref, "rel_error": rel}))
    return EXIT_OK


def cmd_worlds(args) -> int:
    for p in build_paper_worlds(args.out):
        log.info("wrote %s", p)
    return EXIT_OK


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v <= 2 ** 64 - 1:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="./out", help="output directory (default ./out)")
    common.add_argument("--seed", type=_u64, default=None, help="override the scenario seed")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    p = argparse.ArgumentParser(prog="polyexplore", description="Polygon-map exploration simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run one scenario")
    r.add_argument("scenario")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[common], help="grid over one configuration value")
    s.add_argument("scenario")
    s.add_argument("--param", required=True, help="dotted config key, e.g. sensor.illumination")
    s.add_argument("--values", required=True, nargs="+", help="values (comma- or space-separated)")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", parents=[common], help="check a world file")
    v.add_argument("world")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle-clip", parents=[common], help="boolean op vs. sampling oracle")
    o.add_argument("a")
    o.add_argument("b")
    o.add_argument("--op", default="union", choices=["union", "intersection", "difference"])
    o.add_argument("--samples", type=int, default=1_000_000)
    o.set_defaults(func=cmd_oracle_clip)

    w = sub.add_parser("worlds", parents=[common], help="write the bundled worlds to --out")
    w.set_defaults(func=cmd_worlds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        log.error("error: %s", exc)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any failure mid-run is a runtime failure
        log.error("runtime failure: %s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
