"""Orchestration of the multi-resolution render and the naive reference.

The multi-resolution path runs three stages: build the edge mask and its
level pyramid, render the effect per enabled level restricted to that level's
stencil (with an optional masked blur for ambient occlusion), then upsample
everything to full size and composite coarse-to-fine, using each level's
alpha times its weight (clamped at 1) as the blend factor. The reference path
evaluates the same effect for every pixel at full resolution, which fixes the
denominator of the work ratio.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import upsample
from .effects import EffectKind, EffectOutput, EffectParams, eval_effect
from .mask import EdgeImage, EdgeParams, build_edge_image
from .metrics import LevelWork, WorkReport
from .pyramid import (LevelConfig, MaskPyramid, PyramidLevel, build_pyramid,
                      default_levels, gaussian_kernel_1d)
from .scene import (DirectionalLight, GBuffer, Scene, ShadowMap, default_shadow_bias,
                    rasterize_gbuffer, rasterize_shadowmap)

THREADS_ENV = "MRSHADE_THREADS"

DEFAULT_SAMPLES = {EffectKind.SSAO: 64, EffectKind.SSM: 196, EffectKind.SSGI: 288}
DEFAULT_RADIUS = {EffectKind.SSAO: 0.5, EffectKind.SSM: 0.5, EffectKind.SSGI: 2.0}


@dataclass
class SsaoBlur:
    enabled: bool = True
    variance: float = 1.0  # spatial variance at each level's own resolution


@dataclass
class PipelineConfig:
    effect: EffectKind
    params: EffectParams
    edges: EdgeParams
    levels: list[LevelConfig]
    ssao_blur: SsaoBlur = field(default_factory=SsaoBlur)
    shadow_map_res: int = 1024
    shadow_bias: float | None = None  # None -> 1e-3 x scene bounding diagonal

    @classmethod
    def for_effect(cls, effect, **overrides) -> "PipelineConfig":
        """Built-in defaults per effect; keyword overrides replace whole fields."""
        kind = EffectKind(effect)
        params = EffectParams(samples=DEFAULT_SAMPLES[kind], radius=DEFAULT_RADIUS[kind])
        edges = EdgeParams(use_shadow=(kind is EffectKind.SSM))
        cfg = cls(effect=kind, params=params, edges=edges, levels=default_levels(kind.value))
        for key, value in overrides.items():
            if not hasattr(cfg, key):
                raise TypeError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
        return cfg


@dataclass
class RenderInputs:
    gbuffer: GBuffer
    shadowmap: ShadowMap | None
    light: DirectionalLight
    shadow_bias: float


@dataclass
class MultiresResult:
    image: np.ndarray
    work: WorkReport
    edges: EdgeImage
    pyramid: MaskPyramid
    level_outputs: dict[int, EffectOutput]
    inputs: RenderInputs
    timings_ms: dict[str, float]


@dataclass
class ReferenceResult:
    image: np.ndarray
    work: WorkReport
    inputs: RenderInputs
    timings_ms: dict[str, float]


def _needs_shadowmap(cfg: PipelineConfig) -> bool:
    return cfg.effect in (EffectKind.SSM, EffectKind.SSGI) or cfg.edges.use_shadow


def prepare_inputs(cfg: PipelineConfig, scene: Scene, width: int, height: int) -> RenderInputs:
    """Rasterize the G-buffer (and shadow map when the effect or mask needs one)."""
    g = rasterize_gbuffer(scene, width, height)
    sm = rasterize_shadowmap(scene, cfg.shadow_map_res) if _needs_shadowmap(cfg) else None
    bias = cfg.shadow_bias if cfg.shadow_bias is not None else default_shadow_bias(scene)
    return RenderInputs(gbuffer=g, shadowmap=sm, light=scene.light, shadow_bias=bias)


def _resolved_params(cfg: PipelineConfig, inputs: RenderInputs) -> EffectParams:
    return replace(cfg.params, shadow_bias=inputs.shadow_bias)


def render_level(cfg: PipelineConfig, level: LevelConfig, pyramid: MaskPyramid,
                 inputs: RenderInputs) -> EffectOutput:
    """Evaluate the effect at one level's resolution, restricted to its stencil."""
    if not level.enabled:
        raise ValueError(f"level {level.index} is disabled")
    lvl = pyramid.level(level.index)
    params = _resolved_params(cfg, inputs)
    return eval_effect(cfg.effect, inputs.gbuffer, inputs.shadowmap, inputs.light,
                       params, lvl.stencil)


def bilateral_blur_masked(layer: np.ndarray, stencil: np.ndarray, variance: float) -> np.ndarray:
    """Gaussian blur that never mixes in pixels outside the stencil.

    Each neighbor's spatial weight is multiplied by its stencil bit and the
    weights are renormalized over the neighbors actually present; pixels
    outside the stencil stay exactly zero. Out-of-image neighbors count as
    absent.
    """
    if variance < 0:
        raise ValueError("variance must be >= 0")
    if variance == 0:
        return layer
    k1 = gaussian_kernel_1d(variance)
    r = len(k1) // 2
    h, w = stencil.shape
    st = stencil.astype(np.float64)
    num = np.zeros((h, w, 3))
    den = np.zeros((h, w))
    masked = layer * st[..., None]
    for dy in range(-r, r + 1):
        ys0, ys1 = max(0, -dy), min(h, h - dy)
        yd0, yd1 = max(0, dy), min(h, h + dy)
        for dx in range(-r, r + 1):
            wgt = k1[dy + r] * k1[dx + r]
            xs0, xs1 = max(0, -dx), min(w, w - dx)
            xd0, xd1 = max(0, dx), min(w, w + dx)
            num[yd0:yd1, xd0:xd1] += wgt * masked[ys0:ys1, xs0:xs1]
            den[yd0:yd1, xd0:xd1] += wgt * st[ys0:ys1, xs0:xs1]
    ok = stencil & (den > 0)
    out = np.zeros_like(num)
    out[ok] = num[ok] / den[ok][:, None]
    return out


def upsample_layer_masked(layer: np.ndarray, stencil: np.ndarray, w: int, h: int) -> np.ndarray:
    """Bilinear upscale that never mixes in unshaded (outside-stencil) texels.

    Zeros outside the stencil are absence of information, not data; bilinear
    weights are masked by the stencil and renormalized so stencil borders do
    not bleed darkness into the shaded region. Pixels whose whole bilinear
    footprint is unshaded stay zero.
    """
    if layer.shape[0] == h and layer.shape[1] == w:
        return layer.copy()
    st = stencil.astype(np.float64)
    num = upsample(layer * st[..., None], w, h)
    den = upsample(st, w, h)
    out = np.zeros_like(num)
    ok = den > 1e-12
    out[ok] = num[ok] / den[ok][:, None]
    return out


def blend(pyramid: MaskPyramid, layers: dict[int, np.ndarray]) -> np.ndarray:
    """Coarse-to-fine composite at full resolution.

    Starting from the upsampled coarsest layer, each finer enabled level is
    linearly blended on top with factor min(alpha * weight, 1); fully
    saturated pixels therefore take the finer level's value exactly. Layers
    are upsampled stencil-aware, alphas with plain bilinear (zero alpha is
    meaningful data: no blend).
    """
    w, h = pyramid.width, pyramid.height
    order = sorted(pyramid.levels, key=lambda l: l.config.index, reverse=True)
    for lvl in order:
        if lvl.config.index not in layers:
            raise ValueError(f"missing layer for level {lvl.config.index}")
    first = order[0]
    composite = upsample_layer_masked(layers[first.config.index], first.stencil, w, h)
    for lvl in order[1:]:
        c = upsample_layer_masked(layers[lvl.config.index], lvl.stencil, w, h)
        a = upsample(lvl.alpha, w, h)
        t = np.minimum(a * lvl.config.weight, 1.0)[..., None]
        composite = c * t + composite * (1.0 - t)
    return composite


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_multires(cfg: PipelineConfig, scene: Scene, width: int, height: int,
                 inputs: RenderInputs | None = None,
                 edge_mask_override: np.ndarray | None = None) -> MultiresResult:
    """Full multi-resolution render: mask -> pyramid -> per-level passes -> blend."""
    if width % 8 or height % 8:
        raise ValueError("width and height must be divisible by 8")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if inputs is None:
        inputs = prepare_inputs(cfg, scene, width, height)
        timings["inputs"] = (time.perf_counter() - t0) * 1e3

    t1 = time.perf_counter()
    if edge_mask_override is not None:
        override = np.asarray(edge_mask_override, dtype=np.float64)
        if override.shape != (height, width):
            raise ValueError("edge mask override must be full resolution")
        edges = EdgeImage(mask=override)
    else:
        edges = build_edge_image(inputs.gbuffer, inputs.shadowmap, cfg.edges,
                                 shadow_bias=inputs.shadow_bias)
    pyramid = build_pyramid(edges, cfg.levels)
    timings["mask_pyramid"] = (time.perf_counter() - t1) * 1e3

    t2 = time.perf_counter()
    params = _resolved_params(cfg, inputs)

    def _render(lvl: PyramidLevel) -> EffectOutput:
        out = eval_effect(cfg.effect, inputs.gbuffer, inputs.shadowmap, inputs.light,
                          params, lvl.stencil)
        if cfg.effect is EffectKind.SSAO and cfg.ssao_blur.enabled:
            out = replace(out, layer=bilateral_blur_masked(out.layer, lvl.stencil,
                                                           cfg.ssao_blur.variance))
        return out

    workers = _thread_count()
    if workers > 1 and len(pyramid.levels) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rendered = list(pool.map(_render, pyramid.levels))
    else:
        rendered = [_render(lvl) for lvl in pyramid.levels]
    level_outputs = {lvl.config.index: out for lvl, out in zip(pyramid.levels, rendered)}
    timings["levels"] = (time.perf_counter() - t2) * 1e3

    t3 = time.perf_counter()
    image = blend(pyramid, {i: o.layer for i, o in level_outputs.items()})
    timings["blend"] = (time.perf_counter() - t3) * 1e3

    reference_samples = params.samples * int(np.count_nonzero(inputs.gbuffer.valid))
    work = WorkReport(
        levels=[LevelWork(index=lvl.config.index,
                          width=lvl.stencil.shape[1], height=lvl.stencil.shape[0],
                          shaded_pixels=level_outputs[lvl.config.index].shaded_pixels,
                          samples=level_outputs[lvl.config.index].samples_evaluated)
                for lvl in pyramid.levels],
        reference_samples=reference_samples,
    )
    timings["total"] = (time.perf_counter() - t0) * 1e3
    return MultiresResult(image=image, work=work, edges=edges, pyramid=pyramid,
                          level_outputs=level_outputs, inputs=inputs, timings_ms=timings)


def run_reference(cfg: PipelineConfig, scene: Scene, width: int, height: int,
                  inputs: RenderInputs | None = None) -> ReferenceResult:
    """Naive full-resolution render of the same effect over an all-ones domain."""
    if width % 8 or height % 8:
        raise ValueError("width and height must be divisible by 8")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if inputs is None:
        inputs = prepare_inputs(cfg, scene, width, height)
        timings["inputs"] = (time.perf_counter() - t0) * 1e3

    t1 = time.perf_counter()
    params = _resolved_params(cfg, inputs)
    domain = np.ones((height, width), dtype=bool)
    out = eval_effect(cfg.effect, inputs.gbuffer, inputs.shadowmap, scene.light, params, domain)
    layer = out.layer
    if cfg.effect is EffectKind.SSAO and cfg.ssao_blur.enabled:
        layer = bilateral_blur_masked(layer, domain, cfg.ssao_blur.variance)
    timings["reference"] = (time.perf_counter() - t1) * 1e3
    timings["total"] = (time.perf_counter() - t0) * 1e3

    work = WorkReport(
        levels=[LevelWork(index=1, width=width, height=height,
                          shaded_pixels=out.shaded_pixels, samples=out.samples_evaluated)],
        reference_samples=out.samples_evaluated if out.samples_evaluated else params.samples * width * height,
    )
    return ReferenceResult(image=layer, work=work, inputs=inputs, timings_ms=timings)
