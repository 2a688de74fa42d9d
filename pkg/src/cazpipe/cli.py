"""Command-line interface.

Subcommands:
  run            process one scene file, emit a per-frame JSON report
  compare        aggregate pipeline cost vs full-frame baselines over a scene dir
  validate-table check latency-table monotonicity invariants
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .packing import write_ppm
from .pipeline import compare_fullframe, load_config, run_frame, write_svg_overlay
from .scene import load_scene
from .scheduler import LatencyTable


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    scene = load_scene(args.scene)
    report = run_frame(scene, cfg, keep_artifacts=args.viz)
    doc = report.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report_0000.json").write_text(json.dumps(doc, indent=2))
        if args.viz:
            art = report.artifacts
            for i, raster in enumerate(art["rasters"]):
                write_ppm(raster, out / f"composite_0000_{i}.ppm")
            write_svg_overlay(
                out / "overlay_0000.svg",
                scene.camera.frame,
                art["clusters_2d"],
                art["cazones"],
            )
        print(f"wrote report to {out}")
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    return 0


def _cmd_compare(args) -> int:
    cfg = load_config(args.config)
    files = sorted(Path(args.scenes).glob("*.json"))
    if not files:
        print(f"no scene files in {args.scenes}", file=sys.stderr)
        return 1
    scenes = [load_scene(f) for f in files]
    result = compare_fullframe(scenes, cfg)
    json.dump(result, sys.stdout, indent=2)
    print()
    return 0


def _cmd_validate_table(args) -> int:
    table = LatencyTable.from_csv(args.table)
    problems = table.validate()
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return 1
    print(f"OK {args.table}: {len(table.entries)} cells, monotone in size and batch")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cazpipe")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the pipeline on one scene")
    p_run.add_argument("--scene", required=True)
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--viz", action="store_true", help="emit PPM composites and an SVG overlay")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="compare against full-frame baselines")
    p_cmp.add_argument("--scenes", required=True, help="directory of scene JSON files")
    p_cmp.add_argument("--config", required=True)
    p_cmp.set_defaults(func=_cmd_compare)

    p_val = sub.add_parser("validate-table", help="check a latency table CSV")
    p_val.add_argument("--table", required=True)
    p_val.set_defaults(func=_cmd_validate_table)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
