"""Batch driver: render scenes, compare runs, or dump mask debugging output.

Exit codes: 0 success, 1 declared regression (compare), 2 parse/IO failure,
3 run-spec invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import report as rep
from .effects import EffectKind
from .mask import build_edge_image, edge_debug_rgb
from .metrics import rms_error
from .pipeline import PipelineConfig, prepare_inputs, run_multires, run_reference
from .pyramid import LevelConfig, build_pyramid, default_levels, pyramid_debug_rgb
from .scene import Scene, SceneError, load_scene

EXIT_OK = 0
EXIT_REGRESSION = 1
EXIT_PARSE = 2
EXIT_INVARIANT = 3


class RunSpecError(ValueError):
    pass


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(p) for p in text.lower().split("x"))
    except ValueError as exc:
        raise RunSpecError(f"bad --size {text!r}; expected WxH") from exc
    if w % 8 or h % 8:
        raise RunSpecError(f"resolution {w}x{h} must be divisible by 8")
    if w < 8 or h < 8:
        raise RunSpecError("resolution must be at least 8x8")
    return w, h


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise RunSpecError(f"{what} needs {n} comma-separated values")
    return [float(p) for p in parts]


def _build_config(args, scene: Scene) -> PipelineConfig:
    cfg = PipelineConfig.for_effect(args.effect)
    # precedence: built-in defaults < scene-file overrides < CLI flags
    scene_over = scene.defaults.get(args.effect, {})
    params = cfg.params
    if "radius" in scene_over:
        params.radius = float(scene_over["radius"])
    if "pcf_radius" in scene_over:
        params.pcf_radius = float(scene_over["pcf_radius"])
    if "samples" in scene_over:
        params.samples = int(scene_over["samples"])
    if args.samples is not None:
        params.samples = args.samples
    if args.radius is not None:
        params.radius = args.radius
    if args.pcf_radius is not None:
        params.pcf_radius = args.pcf_radius
    params.seed = args.seed
    if params.samples < 1:
        raise RunSpecError("sample count must be >= 1")

    if args.normal_threshold is not None:
        cfg.edges.normal_threshold = args.normal_threshold
    if args.depth_threshold is not None:
        cfg.edges.depth_threshold = args.depth_threshold

    weights = _parse_floats(args.level_weights, 4, "--level-weights") if args.level_weights else None
    variances = _parse_floats(args.level_variances, 4, "--level-variances") if args.level_variances else None
    disabled = set(args.disable_level or [])
    if weights or variances or disabled:
        levels = []
        for lc in default_levels(args.effect):
            v = variances[lc.index - 1] if variances else lc.variance
            w = weights[lc.index - 1] if weights else lc.weight
            en = lc.enabled and lc.index not in disabled
            try:
                levels.append(LevelConfig(index=lc.index, variance=v, weight=w, enabled=en))
            except ValueError as exc:
                raise RunSpecError(str(exc)) from exc
        cfg.levels = levels

    if args.shadow_map_res is not None:
        if args.shadow_map_res < 8:
            raise RunSpecError("shadow map resolution must be at least 8")
        cfg.shadow_map_res = args.shadow_map_res
    if args.shadow_bias is not None:
        cfg.shadow_bias = args.shadow_bias
    if args.no_ssao_blur:
        cfg.ssao_blur.enabled = False
    if args.ssao_blur_variance is not None:
        cfg.ssao_blur.variance = args.ssao_blur_variance
    return cfg


def _report_payload(args, width, height, cfg, work_dict, quality_dict, timings) -> dict:
    return {
        "effect": args.effect,
        "resolution": [width, height],
        "samples": cfg.params.samples,
        "seed": cfg.params.seed,
        "params": {
            "radius": cfg.params.radius,
            "pcf_radius": cfg.params.pcf_radius,
            "shadow_map_res": cfg.shadow_map_res,
        },
        "scene": Path(args.scene).name,
        "work": work_dict,
        "quality": quality_dict,
        "timings_ms": timings,
    }


def _emit_masks(outdir: Path, edges, pyramid) -> None:
    mask_dir = outdir / "masks"
    mask_dir.mkdir(parents=True, exist_ok=True)
    rep.save_png(outdir / "edges.png", edge_debug_rgb(edges))
    rep.save_png(outdir / "pyramid.png", pyramid_debug_rgb(pyramid))
    for lvl in pyramid.levels:
        i = lvl.config.index
        rep.save_png(mask_dir / f"level{i}_alpha.png", lvl.alpha)
        rep.save_png(mask_dir / f"level{i}_stencil.png", lvl.stencil.astype(np.float64))


def cmd_render(args) -> int:
    scene = load_scene(args.scene)
    width, height = _parse_size(args.size)
    cfg = _build_config(args, scene)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    figdir = outdir / "figures"

    inputs = prepare_inputs(cfg, scene, width, height)
    multi = None
    reference = None
    timings: dict[str, float] = {}
    if not args.reference_only:
        multi = run_multires(cfg, scene, width, height, inputs=inputs)
        timings.update({f"multires_{k}": v for k, v in multi.timings_ms.items()})
        rep.save_png(outdir / "multires.png", multi.image)
        rep.save_float(outdir / "multires.npy", multi.image)
    if not args.multires_only:
        reference = run_reference(cfg, scene, width, height, inputs=inputs)
        timings.update({f"reference_{k}": v for k, v in reference.timings_ms.items()})
        rep.save_png(outdir / "reference.png", reference.image)
        rep.save_float(outdir / "reference.npy", reference.image)

    quality_dict = None
    diff_img = None
    if multi is not None and reference is not None:
        quality = rms_error(multi.image, reference.image)
        quality_dict = quality.to_dict()
        diff_img = quality.diff_image
        if args.emit_diff:
            rep.save_png(outdir / "diff.png", diff_img)
            rep.save_float(outdir / "diff.npy", quality.diff_image)

    if multi is not None and args.emit_debug_masks:
        _emit_masks(outdir, multi.edges, multi.pyramid)

    work_dict = multi.work.to_dict() if multi is not None else reference.work.to_dict()
    payload = _report_payload(args, width, height, cfg, work_dict, quality_dict, timings)
    rep.write_report_json(outdir / "report.json", payload)
    rep.write_levels_csv(outdir / "levels.csv", work_dict)
    rep.write_summary_csv(outdir / "summary.csv", payload)

    if not args.no_figures:
        figdir.mkdir(parents=True, exist_ok=True)
        rep.render_comparison_figure(figdir / "comparison.png",
                                     multi.image if multi is not None else None,
                                     reference.image if reference is not None else None,
                                     diff_img, args.effect)
        rep.render_work_figure(figdir / "work.png", work_dict, args.effect)

    if quality_dict is not None:
        print(f"{args.effect} {width}x{height}: rms={quality_dict['rms']:.6f} "
              f"work_ratio={work_dict['ratio']:.4f}")
    else:
        print(f"{args.effect} {width}x{height}: samples={work_dict['total_samples']}")
    return EXIT_OK


def cmd_masks(args) -> int:
    scene = load_scene(args.scene)
    width, height = _parse_size(args.size)
    cfg = _build_config(args, scene)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inputs = prepare_inputs(cfg, scene, width, height)

    edges = build_edge_image(inputs.gbuffer, inputs.shadowmap, cfg.edges,
                             shadow_bias=inputs.shadow_bias)
    pyramid = build_pyramid(edges, cfg.levels)
    _emit_masks(outdir, edges, pyramid)

    coverage = {lvl.config.index: float(lvl.stencil.mean()) for lvl in pyramid.levels}
    with open(outdir / "coverage.csv", "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["level", "stencil_coverage"])
        for i, c in sorted(coverage.items()):
            out.writerow([i, c])
    print("mask coverage: " + ", ".join(f"L{i}={c:.3f}" for i, c in sorted(coverage.items())))
    return EXIT_OK


_COMPARE_KEYS = ("effect", "resolution", "samples", "work", "quality")


class ReportError(ValueError):
    pass


def _load_compare_report(path) -> dict:
    try:
        doc = rep.load_report_json(path)
    except json.JSONDecodeError as exc:
        raise ReportError(f"report {path} is not valid JSON: {exc}") from exc
    missing = [k for k in _COMPARE_KEYS if k not in doc]
    if missing:
        raise ReportError(f"report {path} missing keys: {missing}")
    if "ratio" not in doc["work"] or "reduction" not in doc["work"]:
        raise ReportError(f"report {path} work block missing ratio/reduction")
    return doc


def cmd_compare(args) -> int:
    a = _load_compare_report(args.run_a)
    b = _load_compare_report(args.run_b)
    qa, qb = a["quality"], b["quality"]
    if (qa is None) != (qb is None):
        raise ReportError("one report lacks a quality block; runs are not comparable")

    ratio_delta = b["work"]["ratio"] - a["work"]["ratio"]
    red_delta = b["work"]["reduction"] - a["work"]["reduction"]
    rms_delta = (qb["rms"] - qa["rms"]) if qa is not None else 0.0
    print(f"{'metric':<16}{'run_a':>14}{'run_b':>14}{'delta':>14}")
    print(f"{'work_ratio':<16}{a['work']['ratio']:>14.6f}{b['work']['ratio']:>14.6f}{ratio_delta:>+14.6f}")
    print(f"{'work_reduction':<16}{a['work']['reduction']:>14.6f}{b['work']['reduction']:>14.6f}{red_delta:>+14.6f}")
    if qa is not None:
        print(f"{'rms':<16}{qa['rms']:>14.6f}{qb['rms']:>14.6f}{rms_delta:>+14.6f}")

    failed = False
    if args.max_rms is not None and rms_delta > args.max_rms:
        print(f"REGRESSION: rms delta {rms_delta:.6f} exceeds --max-rms {args.max_rms}")
        failed = True
    if args.max_work_ratio is not None and ratio_delta > args.max_work_ratio:
        print(f"REGRESSION: work ratio delta {ratio_delta:.6f} exceeds --max-work-ratio {args.max_work_ratio}")
        failed = True
    return EXIT_REGRESSION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrshade",
                                     description="Edge-aware multi-resolution screen-space shading")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--scene", required=True, help="scene JSON path")
        p.add_argument("--effect", choices=[e.value for e in EffectKind], default="ssao")
        p.add_argument("--size", default="640x360", help="WxH, both divisible by 8")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--radius", type=float, default=None, help="world-space effect radius")
        p.add_argument("--pcf-radius", type=float, default=None, help="soft-shadow disk in shadow-map texels")
        p.add_argument("--normal-threshold", type=float, default=None)
        p.add_argument("--depth-threshold", type=float, default=None)
        p.add_argument("--level-weights", default=None, help="w1,w2,w3,w4")
        p.add_argument("--level-variances", default=None, help="v1,v2,v3,v4")
        p.add_argument("--disable-level", type=int, action="append", choices=[1, 2, 3],
                       help="drop a level from the ladder (repeatable)")
        p.add_argument("--shadow-map-res", type=int, default=None)
        p.add_argument("--shadow-bias", type=float, default=None)
        p.add_argument("--no-ssao-blur", action="store_true")
        p.add_argument("--ssao-blur-variance", type=float, default=None)
        p.add_argument("--out", required=True, help="output directory")

    render = sub.add_parser("render", help="render a scene with multi-res and reference pipelines")
    add_run_args(render)
    render.add_argument("--emit-debug-masks", action="store_true")
    render.add_argument("--emit-diff", action="store_true")
    render.add_argument("--no-figures", action="store_true")
    group = render.add_mutually_exclusive_group()
    group.add_argument("--reference-only", action="store_true")
    group.add_argument("--multires-only", action="store_true")
    render.set_defaults(func=cmd_render)

    masks = sub.add_parser("masks", help="mask-only debug run (edge image + pyramid)")
    add_run_args(masks)
    masks.set_defaults(func=cmd_masks)

    compare = sub.add_parser("compare", help="diff two report.json files")
    compare.add_argument("run_a")
    compare.add_argument("run_b")
    compare.add_argument("--max-rms", type=float, default=None)
    compare.add_argument("--max-work-ratio", type=float, default=None)
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RunSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (SceneError, ReportError, FileNotFoundError, IsADirectoryError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
