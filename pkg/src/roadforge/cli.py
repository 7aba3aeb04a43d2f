"""Command-line front end for the pipeline stages.

Every run resolves its full parameter set (defaults, then config file,
then flags), echoes it at startup, and embeds it in a JSON report next to
the primary output, so a report suffices to reproduce the run.  Exit
codes: 0 success, 1 usage or configuration, 2 unreadable or malformed
input, 3 degenerate data or failed estimation.

Randomness derives from the single root seed: the synthetic scene
consumes ``seed`` itself, pose refinement draws RANSAC samples from
``seed + 1`` (inside refine_pose), the initial-pose perturbation uses
``seed + 2``, and glyph batches hash the per-image index into ``seed``.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import cloud as cloudmod
from . import glyph as glyphmod
from . import groundfilter, raster, scene, tin
from .config import effective_config, load_config
from .errors import (
    ConfigError,
    DivergenceError,
    EmptyInputError,
    ParameterError,
    ParseError,
    RoadforgeError,
)
from .pose import RansacParams, RefineParams, refine_pose, rotation_angle

log = logging.getLogger("roadforge")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG}


@dataclass(frozen=True)
class CommandResult:
    exit_code: int
    report_path: str = None


def _setup_logging():
    name = os.environ.get("ROADFORGE_LOG", "info").strip().lower()
    if name not in _LOG_LEVELS:
        raise ConfigError(
            f"ROADFORGE_LOG must be one of {sorted(_LOG_LEVELS)}, "
            f"got {name!r}")
    logging.basicConfig(level=_LOG_LEVELS[name],
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    log.setLevel(_LOG_LEVELS[name])


def _write_report(path, payload):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _report_path(args, primary_out, is_dir=False):
    if args.report:
        return args.report
    if is_dir:
        return os.path.join(primary_out, "report.json")
    return primary_out + ".report.json"


def _load_labeled_cloud(path, labels_path):
    pc = cloudmod.load_cloud(path)
    labels = groundfilter.read_labels(labels_path)
    if len(labels) != len(pc):
        raise ParameterError(
            f"labels file {labels_path} holds {len(labels)} entries for a "
            f"cloud of {len(pc)} points")
    return pc, labels


def _filter_params(block):
    return groundfilter.FilterParams(
        initial_cell=block["initial_cell"], min_cell=block["min_cell"],
        dist_thresh=block["dist_thresh"], angle_thresh=block["angle_thresh"],
        normal_limit=block["normal_limit"],
        enable_nonobtuse=block["enable_nonobtuse"],
        enable_normal=block["enable_normal"],
        corner_seed_mode=block["corner_seed_mode"])


def _raster_params(block):
    return raster.RasterParams(
        resolution=block["resolution"], aggregator=block["aggregator"],
        threshold_method=block["threshold_method"], sigma=block["sigma"],
        window=block["window"], stride=block["stride"],
        edge_mag_thresh=block["edge_mag_thresh"],
        min_edge_density=block["min_edge_density"])


# -- handlers ------------------------------------------------------------------


def _cmd_clean(args, cfg):
    pc = cloudmod.load_cloud(args.infile)
    bad = cloudmod.outlier_mask(pc, r=cfg["clean"]["radius"],
                                k_min=cfg["clean"]["k_min"])
    kept = pc.select(~bad)
    cloudmod.save_cloud(kept, args.out)
    return {
        "inputs": {"cloud": args.infile},
        "outputs": {"cloud": args.out},
        "stats": {"points": len(pc), "kept": len(kept),
                  "outliers": int(bad.sum())},
    }


def _cmd_ground(args, cfg):
    pc = cloudmod.load_cloud(args.infile)
    bad = cloudmod.outlier_mask(pc, r=cfg["clean"]["radius"],
                                k_min=cfg["clean"]["k_min"])
    inliers = pc.select(~bad)
    orig = np.flatnonzero(~bad)
    result = groundfilter.filter_ground(inliers,
                                        _filter_params(cfg["ground"]))
    labels = groundfilter.make_labels(len(pc), np.flatnonzero(bad),
                                      orig[result.ground])
    groundfilter.write_labels(args.out, labels)
    return {
        "inputs": {"cloud": args.infile},
        "outputs": {"labels": args.out},
        "stats": {
            "points": len(pc),
            "outliers": int(bad.sum()),
            "ground": int(result.ground.size),
            "nonground": int(result.nonground.size),
            "levels": [{"cell": lv.cell, "seeds_added": lv.seeds_added,
                        "accepted": lv.accepted} for lv in result.levels],
            "final_accepted": result.final_accepted,
        },
    }


def _cmd_dem(args, cfg):
    pc, labels = _load_labeled_cloud(args.infile, args.labels)
    ground = pc.select(labels == groundfilter.LABEL_GROUND)
    mesh = tin.delaunay_triangulate(ground.xyz)
    grid = tin.rasterize_dem(mesh, cell=cfg["dem"]["cell"])
    tin.write_esri_ascii(grid, args.out)
    valid = int(np.count_nonzero(grid.values != tin.NODATA))
    return {
        "inputs": {"cloud": args.infile, "labels": args.labels},
        "outputs": {"dem": args.out},
        "stats": {"ground_points": len(ground),
                  "rows": int(grid.values.shape[0]),
                  "cols": int(grid.values.shape[1]),
                  "valid_cells": valid},
    }


def _cmd_intensity(args, cfg):
    pc, labels = _load_labeled_cloud(args.infile, args.labels)
    ground = pc.select(labels == groundfilter.LABEL_GROUND)
    params = _raster_params(cfg["raster"])
    if len(ground) == 0:
        raise EmptyInputError("no ground points to rasterize")
    threshold = raster.compute_threshold(ground.intensity,
                                         params.threshold_method)
    bright = ground.select(ground.intensity >= threshold)
    image = raster.rasterize_intensity(bright, params)
    raster.write_pgm(image, args.out)
    return {
        "inputs": {"cloud": args.infile, "labels": args.labels},
        "outputs": {"image": args.out},
        "stats": {"ground_points": len(ground),
                  "threshold": float(threshold),
                  "retained": len(bright),
                  "rows": int(image.pixels.shape[0]),
                  "cols": int(image.pixels.shape[1])},
    }


def _cmd_tiles(args, cfg):
    image = raster.read_pgm(args.infile)
    params = _raster_params(cfg["raster"])
    tileset = raster.split_tiles(image, params)
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = raster.save_tiles(tileset, args.out_dir)
    return {
        "inputs": {"image": args.infile},
        "outputs": {"directory": args.out_dir, "manifest": manifest},
        "stats": {"kept": len(tileset.kept),
                  "dropped": tileset.dropped},
    }


def _cmd_glyph(args, cfg):
    if os.path.isdir(args.infile):
        names = sorted(f for f in os.listdir(args.infile)
                       if f.endswith(".pgm"))
        paths = [os.path.join(args.infile, f) for f in names]
    else:
        names = [os.path.basename(args.infile)]
        paths = [args.infile]
    if not paths:
        raise ParameterError(f"no .pgm files under {args.infile}")
    block = dict(cfg["glyph"])
    if args.preset:
        base = glyphmod.preset(args.preset)
        block.update(p_distort=base.p_distort,
                     distort_mode=base.distort_mode,
                     median_passes=base.median_passes,
                     noise_density=base.noise_density)
        cfg["glyph"] = dict(block)
    dc = glyphmod.DegradeConfig(
        p_distort=block["p_distort"], distort_mode=block["distort_mode"],
        median_passes=block["median_passes"],
        noise_density=block["noise_density"],
        target_size=block["target_size"], rng_seed=cfg["seed"])
    images = [glyphmod.read_glyph_pgm(p) for p in paths]
    degraded = glyphmod.degrade_batch(images, dc)
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    for name, img in zip(names, degraded):
        out = os.path.join(args.out_dir, name)
        glyphmod.write_glyph_pgm(img, out)
        outputs.append(out)
    return {
        "inputs": {"glyphs": paths},
        "outputs": {"glyphs": outputs},
        "stats": {"count": len(outputs),
                  "preset": args.preset,
                  "seed": cfg["seed"]},
    }


def _cmd_pose_sim(args, cfg):
    sc_cfg = cfg["scene"]
    if args.scene:
        sim = scene.load_scene(args.scene)
    else:
        sim = scene.make_scene(
            n_plane=sc_cfg["n_plane"], n_clutter=sc_cfg["n_clutter"],
            noise_sigma_px=sc_cfg["noise_sigma_px"],
            outlier_fraction=sc_cfg["outlier_fraction"],
            seed=cfg["seed"], patch_half=sc_cfg["patch_half"],
            plane_tilt_deg=sc_cfg["plane_tilt_deg"],
            camera_height=sc_cfg["camera_height"],
            width=sc_cfg["width"], height=sc_cfg["height"])
    if args.save_scene:
        scene.save_scene(sim, args.save_scene)
    pose_cfg = cfg["pose"]
    initial = scene.perturb_pose(sim.true_pose, pose_cfg["offset_deg"],
                                 pose_cfg["offset_m"], rng=cfg["seed"] + 2)
    params = RefineParams(
        max_iters=pose_cfg["max_iters"],
        stop_rel_change=pose_cfg["stop_rel_change"],
        ransac=RansacParams(threshold_px=pose_cfg["ransac_threshold_px"],
                            confidence=pose_cfg["ransac_confidence"],
                            max_trials=pose_cfg["ransac_max_trials"]),
        polish=pose_cfg["polish"], gn_max_iters=pose_cfg["gn_max_iters"],
        gn_step_tol=pose_cfg["gn_step_tol"])
    try:
        final, trace = refine_pose(sim, initial, params)
    except DivergenceError as exc:
        if exc.trace is not None:
            scene.save_trace(exc.trace, args.out)
        raise
    scene.save_trace(trace, args.out)
    print(f"{'iter':>4} {'rmse_px':>12} {'inliers':>9} {'rel_chg':>10} "
          f"{'rot_err_deg':>12} {'trans_err_m':>12}")
    for rec in trace:
        print(f"{rec.iteration:>4} {rec.rmse_px:>12.4g} "
              f"{rec.inliers:>5}/{rec.pairs:<3} {rec.rel_change:>10.3g} "
              f"{rec.rotation_error_deg:>12.4g} "
              f"{rec.translation_error_m:>12.4g}")
    last = trace[-1]
    return {
        "inputs": {"scene": args.scene or "<generated>"},
        "outputs": {"trace": args.out,
                    **({"scene": args.save_scene}
                       if args.save_scene else {})},
        "stats": {"iterations": len(trace),
                  "initial_rotation_error_deg": float(
                      np.degrees(rotation_angle(
                          initial.R @ sim.true_pose.R.T))),
                  "final_rotation_error_deg": last.rotation_error_deg,
                  "final_translation_error_m": last.translation_error_m,
                  "final_rmse_px": last.rmse_px,
                  "final_inliers": last.inliers},
    }


_HANDLERS = {
    "clean": (_cmd_clean, "out", False),
    "ground": (_cmd_ground, "out", False),
    "dem": (_cmd_dem, "out", False),
    "intensity": (_cmd_intensity, "out", False),
    "tiles": (_cmd_tiles, "out_dir", True),
    "glyph": (_cmd_glyph, "out_dir", True),
    "pose-sim": (_cmd_pose_sim, "out", False),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--report", help="JSON report path "
                        "(default: next to the primary output)")
    common.add_argument("--seed", type=int, help="root random seed")
    parser = argparse.ArgumentParser(
        prog="roadforge",
        description="Road-model toolkit: ground filtering, DEM and "
                    "intensity rasters, marking tiles, glyph degradation, "
                    "and pose refinement simulation.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                required=True)

    p = sub.add_parser("clean", parents=[common],
                       help="remove sparse-neighborhood outliers")
    p.add_argument("--in", dest="infile", required=True,
                   help="input xyz+intensity text cloud")
    p.add_argument("--out", required=True, help="cleaned cloud path")

    p = sub.add_parser("ground", parents=[common],
                       help="classify ground points by progressive "
                            "TIN densification")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="labels path")

    p = sub.add_parser("dem", parents=[common],
                       help="rasterize labeled ground points to an "
                            "ESRI ASCII grid")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True, help=".asc output path")

    p = sub.add_parser("intensity", parents=[common],
                       help="threshold bright returns and write an "
                            "intensity image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True, help=".pgm output path")

    p = sub.add_parser("tiles", parents=[common],
                       help="cut an intensity image into marking tiles")
    p.add_argument("--in", dest="infile", required=True, help="input .pgm")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("glyph", parents=[common],
                       help="degrade binary glyph images")
    p.add_argument("--in", dest="infile", required=True,
                   help=".pgm file or directory of .pgm files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--preset", choices=sorted(glyphmod.PRESETS),
                   help="named degradation recipe")

    p = sub.add_parser("pose-sim", parents=[common],
                       help="run pose refinement on a synthetic scene")
    p.add_argument("--out", required=True, help="trace JSON path")
    p.add_argument("--scene", help="load a saved scene instead of "
                   "generating one")
    p.add_argument("--save-scene", help="write the generated scene")

    return parser


def execute(argv=None):
    """Parse, dispatch, and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CommandResult(0 if not exc.code else 1)
    try:
        _setup_logging()
        file_cfg = load_config(args.config) if args.config else {}
        cfg = effective_config(file_cfg, {"seed": args.seed})
        log.info("effective config: %s", json.dumps(cfg, sort_keys=True))
        handler, out_attr, is_dir = _HANDLERS[args.command]
        report = handler(args, cfg)
        report["schema_version"] = 1
        report["command"] = args.command
        report["config"] = cfg
        report_path = _report_path(args, getattr(args, out_attr), is_dir)
        if is_dir:
            os.makedirs(getattr(args, out_attr), exist_ok=True)
        _write_report(report_path, report)
        log.info("report: %s", report_path)
        return CommandResult(0, report_path)
    except ParameterError as exc:
        log.error("%s", exc)
        return CommandResult(1)
    except ParseError as exc:
        log.error("%s", exc)
        return CommandResult(2)
    except OSError as exc:
        name = getattr(exc, "filename", None)
        log.error("%s%s", exc.strerror or exc,
                  f": {name}" if name else "")
        return CommandResult(2)
    except RoadforgeError as exc:
        log.error("%s", exc)
        return CommandResult(3)


def run(argv=None):
    return execute(argv).exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
