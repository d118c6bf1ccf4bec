"""Command-line entry point: ``leadepth <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, write_manifest
from .core import Rect
from .depth_io import (load_depth_png, load_image_png, save_depth_png, save_gray_png,
                       save_image_png)
from .errors import ConfigError, DataError, OracleUnavailable
from .geometry import CameraIntrinsics, CameraRig, PoseSE3, photometric_error, warp
from .metrics import (CSV_COLUMNS, ScaleProtocol, calibrate_fixed_scale, evaluate_protocol,
                      mean_report, write_csv)
from .pdc import compose_full, make_generator
from .propagation import build_schedule
from .resample import resample, valid_bbox
from .scene import SCENES, render_scene

log = logging.getLogger("leadepth")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3
FRAME_TAGS = {-1: "m1", 0: "0", 1: "p1"}


def _config(args):
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides), overrides


def _manifest(command, cfg, overrides, **extra):
    m = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "master_seed": cfg.seed,
        "overrides": overrides,
    }
    m.update(extra)
    return m


def _pose_dict(p):
    return {"rotation": p.rotation.tolist(), "translation": p.translation.tolist()}


def _pose_from(d):
    return PoseSE3(np.array(d["rotation"]), np.array(d["translation"]))


# subcommands

def cmd_synth(args):
    cfg, overrides = _config(args)
    out = Path(args.out or cfg.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        factory = SCENES[cfg.synth.scene]
    except KeyError:
        raise ConfigError(f"unknown scene {cfg.synth.scene!r}; choose from {sorted(SCENES)}")
    scene = factory(width=cfg.synth.width, height=cfg.synth.height)
    files = []
    for t, tag in FRAME_TAGS.items():
        img, depth = render_scene(scene, t)
        save_image_png(img, out / f"frame_{tag}.png")
        save_depth_png(depth, out / f"depth_{tag}.png")
        files += [f"frame_{tag}.png", f"depth_{tag}.png"]
    K = scene.intrinsics
    camera = {
        "intrinsics": {"fx": K.fx, "fy": K.fy, "cx": K.cx, "cy": K.cy},
        "width": scene.width, "height": scene.height,
        "pose_0_to_m1": _pose_dict(scene.relative_pose(0, -1)),
        "pose_0_to_p1": _pose_dict(scene.relative_pose(0, 1)),
    }
    write_manifest(out / "camera.json", camera)
    files.append("camera.json")
    write_manifest(out / "manifest.json", _manifest("synth", cfg, overrides, outputs=files))
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_resample(args):
    cfg, overrides = _config(args)
    gt_path = args.gt or cfg.paths.gt
    if gt_path is None:
        raise ConfigError("no ground truth given (--gt or paths.gt)")
    out = Path(args.out or Path(cfg.paths.out_dir) / "partial.png")
    out.parent.mkdir(parents=True, exist_ok=True)
    gt = load_depth_png(gt_path)
    mode = cfg.resample_mode()
    part = resample(gt, mode)
    save_depth_png(part.depth, out)
    write_manifest(out.with_suffix(".json"), _manifest(
        "resample", cfg, overrides, input=str(gt_path), output=out.name,
        rect=part.rect.as_list(), valid_pixels=int(part.depth.mask.sum())))
    print(f"{mode.kind}: rect={part.rect.as_list()} valid={int(part.depth.mask.sum())} -> {out}")
    return EXIT_OK


def cmd_propagate(args):
    cfg, overrides = _config(args)
    p = cfg.paths
    if p.image is None or p.partial is None:
        raise ConfigError("paths.image and paths.partial are required")
    image = load_image_png(p.image)
    partial = load_depth_png(p.partial)
    coarse = load_depth_png(p.coarse) if p.coarse else None
    gt = load_depth_png(p.gt) if p.gt else None
    try:
        gen = make_generator(cfg.generator.name, gt=gt, **cfg.generator.params)
    except (TypeError, ValueError, OracleUnavailable) as e:
        raise ConfigError(f"generator {cfg.generator.name!r}: {e}") from e
    rect = Rect(*cfg.propagation.partial_rect) if cfg.propagation.partial_rect else valid_bbox(partial)
    schedule = build_schedule(image.shape, rect, cfg.propagation.stages)
    result = compose_full(image, partial, schedule, gen, cfg.pdc_config(), cfg.seed, coarse)
    out = Path(args.out or p.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_depth_png(result.depth, out / "depth.png")
    save_depth_png(result.uncertainty, out / "uncertainty.png")
    stages = [{"stage": r.index, "rect": r.rect.as_list(), "seeds": r.seeds,
               "objectives": r.objectives, "winner": r.winner} for r in result.stages]
    write_manifest(out / "manifest.json", _manifest(
        "propagate", cfg, overrides, schedule=schedule.as_lists(), stages=stages,
        outputs=["depth.png", "uncertainty.png"]))
    print(f"propagated over {schedule.count} stages -> {out}")
    return EXIT_OK


def _pairs(pred_dir, gt_dir):
    pred = {f.name: f for f in Path(pred_dir).glob("*.png")}
    gt = {f.name: f for f in Path(gt_dir).glob("*.png")}
    missing = sorted(set(pred) ^ set(gt))
    common = sorted(set(pred) & set(gt))
    return [(n, pred[n], gt[n]) for n in common], missing


def cmd_evaluate(args):
    cfg, overrides = _config(args)
    try:
        proto = ScaleProtocol(args.protocol or cfg.metrics.protocol,
                              args.fixed_scale if args.fixed_scale is not None
                              else cfg.metrics.fixed_scale)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    rf = cfg.range_filter()
    if args.range_min is not None or args.range_max is not None:
        rf = (args.range_min, args.range_max)
    pairs, missing = _pairs(args.pred_dir, args.gt_dir)
    if missing:
        for n in missing:
            print(f"missing pair: {n}", file=sys.stderr)
    if not pairs:
        raise DataError("no matching prediction/ground-truth pairs")
    if proto.mode == "P" and not args.partial_dir:
        raise ConfigError("protocol P needs --partial-dir")

    def one(item):
        name, pp, gp = item
        part = load_depth_png(Path(args.partial_dir) / name) if proto.mode == "P" else None
        return evaluate_protocol(load_depth_png(pp), load_depth_png(gp), proto, part, rf,
                                 image_id=Path(name).stem)

    with ThreadPoolExecutor(max_workers=args.jobs) as ex:
        reports = sorted(ex.map(one, pairs), key=lambda r: r.image_id)
    for r in reports:
        print(r.line())
    summary = mean_report(reports)
    print(summary.line())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_csv(reports, args.out)
        write_manifest(Path(args.out).with_suffix(".json"), _manifest(
            "evaluate", cfg, overrides, protocol=proto.mode, fixed_scale=proto.fixed_scale,
            range_filter=list(rf) if rf else None, columns=list(CSV_COLUMNS),
            summary=summary.row(), missing=missing))
    return EXIT_DATA if missing else EXIT_OK


def cmd_calib_scale(args):
    cfg, overrides = _config(args)
    pairs, missing = _pairs(args.pred_dir, args.gt_dir)
    if missing or not pairs:
        for n in missing:
            print(f"missing pair: {n}", file=sys.stderr)
        raise DataError("calibration split has unmatched or no pairs")
    s = calibrate_fixed_scale((load_depth_png(p), load_depth_png(g)) for _, p, g in pairs)
    print(f"fixed_scale={s!r} over {len(pairs)} images")
    if args.out:
        write_manifest(Path(args.out), _manifest(
            "calib-scale", cfg, overrides, fixed_scale=s, images=[n for n, _, _ in pairs]))
    return EXIT_OK


def cmd_warp_check(args):
    cfg, overrides = _config(args)
    d = Path(args.synth_dir)
    with open(d / "camera.json") as f:
        cam = json.load(f)
    K = CameraIntrinsics(**cam["intrinsics"])
    target = load_image_png(d / "frame_0.png")
    depth = load_depth_png(d / "depth_0.png")
    worst = 0.0
    for tag in ("m1", "p1"):
        src = load_image_png(d / f"frame_{tag}.png")
        warped, mask = warp(src, depth, CameraRig(K, _pose_from(cam[f"pose_0_to_{tag}"])))
        l1 = photometric_error(warped, target, mask, alpha=0.0)
        worst = max(worst, l1)
        print(f"frame {tag} -> 0: mean L1 {l1:.6f} over {int(mask.sum())} px")
    if args.max_l1 is not None and worst > args.max_l1:
        print(f"warp check failed: {worst:.6f} > {args.max_l1}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def error_raster(pred, gt, max_error):
    """Absolute error mapped linearly to 0..255 (black = 0 m, white >= max_error); invalid GT is black."""
    if pred.shape != gt.shape:
        raise DataError(f"prediction {pred.shape} and ground truth {gt.shape} differ in size")
    err = np.abs(pred.values - gt.values)
    g = np.floor(np.clip(err / max_error, 0.0, 1.0) * 255.0 + 0.5)
    g[~gt.mask] = 0
    return g.astype(np.uint8)


def cmd_render_error(args):
    if not args.max_error > 0:
        raise ConfigError("--max-error must be positive")
    pred, gt = load_depth_png(args.pred), load_depth_png(args.gt)
    raster = error_raster(pred, gt, args.max_error)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_gray_png(raster, out)
    legend = {"command": "render-error", "version": __version__, "pred": str(args.pred),
              "gt": str(args.gt), "colormap": "linear-gray", "units": "m", "black": 0.0,
              "white": args.max_error, "invalid_gt": "black",
              "value": "round(255 * min(|pred - gt| / white, 1))"}
    write_manifest(out.with_suffix(".legend.json"), legend)
    print(f"error raster -> {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="leadepth", description="Extend a small-FoV partial depth map to the full camera frame.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value, e.g. pdc.lam=0.5 (repeatable)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        return p

    p = common(sub.add_parser("synth", help="render the synthetic three-frame dataset"))
    p.add_argument("--out", help="output directory (default paths.out_dir)")
    p.set_defaults(func=cmd_synth)

    p = common(sub.add_parser("resample", help="cut a partial depth map out of ground truth"))
    p.add_argument("--gt", help="ground-truth depth PNG (default paths.gt)")
    p.add_argument("--out", help="output partial depth PNG")
    p.set_defaults(func=cmd_resample)

    p = common(sub.add_parser("propagate", help="extend partial depth to the full frame"))
    p.add_argument("--out", help="output directory (default paths.out_dir)")
    p.set_defaults(func=cmd_propagate)

    p = common(sub.add_parser("evaluate", help="metrics over matching prediction/GT PNG pairs"))
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--partial-dir", help="partial depth PNGs (protocol P)")
    p.add_argument("--protocol", choices=("M", "F", "P"))
    p.add_argument("--fixed-scale", type=float, help="scale for protocol F")
    p.add_argument("--range-min", type=float, help="keep pixels with gt >= this (m)")
    p.add_argument("--range-max", type=float, help="keep pixels with gt < this (m)")
    p.add_argument("--out", help="CSV report path")
    p.add_argument("--jobs", type=int, default=4, help="worker threads")
    p.set_defaults(func=cmd_evaluate)

    p = common(sub.add_parser("calib-scale", help="mean per-image median scale for protocol F"))
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--out", help="JSON output")
    p.set_defaults(func=cmd_calib_scale)

    p = common(sub.add_parser("warp-check", help="warp synthetic neighbours onto the centre frame"))
    p.add_argument("--synth-dir", required=True)
    p.add_argument("--max-l1", type=float, help="fail (exit 3) above this mean L1")
    p.set_defaults(func=cmd_warp_check)

    p = sub.add_parser("render-error", help="absolute depth error as a grayscale PNG")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-error", type=float, default=2.0, help="error mapped to white (m)")
    p.set_defaults(func=cmd_render_error)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
