"""Screen-space lighting effects behind one stencil-restricted interface.

Every effect evaluates only where the domain stencil is set (and geometry
covers the pixel), reads the full-resolution G-buffer at the evaluation
grid's pixel centers, and accounts for the exact number of samples spent.
Randomness is a counter-based hash of (pixel, sample index, lane, seed), so
outputs are deterministic, order-independent, and identical under domain
restriction. The soft-shadow filter instead jitters one disk pattern per run
(hash of sample index only): sharing the taps across pixels keeps penumbra
ramps monotone instead of dithering them with per-pixel noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .scene import (DirectionalLight, GBuffer, ShadowMap, focal_length_px,
                    project_to_light, shadow_test_hard)


class EffectKind(str, Enum):
    SSAO = "ssao"
    SSM = "ssm"
    SSGI = "ssgi"


@dataclass
class EffectParams:
    samples: int = 64
    radius: float = 0.5        # world units: occlusion hemisphere / indirect gather radius
    pcf_radius: float = 3.0    # shadow-map texels (soft shadows only)
    seed: int = 0
    occlusion_bias: float | None = None  # depth-compare bias; None -> 0.02 * radius
    shadow_bias: float = 0.0   # world units for hard shadow taps

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")
        if self.radius <= 0 or self.pcf_radius <= 0:
            raise ValueError("radii must be > 0")


@dataclass
class EffectOutput:
    layer: np.ndarray       # (h, w, 3) in [0, 1]; zero outside the shaded set
    samples_evaluated: int  # samples x number of pixels actually shaded
    shaded_pixels: int


# ---------------------------------------------------------------------------
# counter-based RNG (murmur3-style finalizer over pixel/sample/lane/seed)

_M1 = np.uint32(0x85EBCA6B)
_M2 = np.uint32(0xC2B2AE35)
_PX = np.uint32(0x01000193)
_PY = np.uint32(0x68E31DA5)


def _mix_u32(h: np.ndarray) -> np.ndarray:
    h = h ^ (h >> np.uint32(16))
    h = h * _M1
    h = h ^ (h >> np.uint32(13))
    h = h * _M2
    h = h ^ (h >> np.uint32(16))
    return h


def _stream_base(seed: int, sample_index: int, lane: int) -> np.uint32:
    # fold the 64-bit seed and the counters with plain masked python ints
    s = int(seed) & 0xFFFFFFFFFFFFFFFF
    h = (s ^ (s >> 32)) & 0xFFFFFFFF
    h = (h * 0x9E3779B1 + int(sample_index) * 0x85EBCA77 + int(lane) * 0xC2B2AE3D + 0x165667B1) & 0xFFFFFFFF
    return np.uint32(h)


def hash01(xs: np.ndarray, ys: np.ndarray, sample_index: int, lane: int, seed: int) -> np.ndarray:
    """Uniform values in (0, 1), one per coordinate pair, fully deterministic."""
    base = _stream_base(seed, sample_index, lane)
    h = _mix_u32(np.asarray(xs, dtype=np.uint32) * _PX ^ base)
    h = _mix_u32(h ^ (np.asarray(ys, dtype=np.uint32) * _PY))
    return (h.astype(np.float64) + 0.5) * (2.0 ** -32)


# ---------------------------------------------------------------------------
# shared helpers

def _grid_to_full(full: int, n: int) -> np.ndarray:
    """Nearest full-resolution index under each evaluation-grid pixel center."""
    idx = np.floor((np.arange(n) + 0.5) * (full / n)).astype(np.intp)
    return np.clip(idx, 0, full - 1)


def _shaded_set(g: GBuffer, domain: np.ndarray):
    h_e, w_e = domain.shape
    mx = _grid_to_full(g.width, w_e)
    my = _grid_to_full(g.height, h_e)
    valid_e = g.valid[np.ix_(my, mx)]
    shaded = domain.astype(bool) & valid_e
    ys, xs = np.nonzero(shaded)
    return ys, xs, mx, my


def _renorm(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 1e-12, n, 1.0)


def _orthobasis(n: np.ndarray):
    helper = np.where(np.abs(n[:, 2:3]) < 0.999,
                      np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    t = _renorm(np.cross(helper, n))
    b = np.cross(n, t)
    return t, b


def _light_dir_view(g: GBuffer, light: DirectionalLight) -> np.ndarray:
    return g.view_from_world[:3, :3] @ light.direction


def _check_resolution(domain: np.ndarray, resolution):
    if resolution is not None and tuple(resolution) != (domain.shape[1], domain.shape[0]):
        raise ValueError("resolution does not match the domain stencil")


# ---------------------------------------------------------------------------
# ambient occlusion

def eval_ssao(g: GBuffer, params: EffectParams, domain: np.ndarray,
              resolution=None) -> EffectOutput:
    """Hemisphere-sampled screen-space ambient occlusion.

    Per shaded pixel: scatter cosine-weighted points inside a hemisphere of
    `radius` around the surface, project each to the screen, and count it
    occluded when the G-buffer surface there is closer than the point (beyond
    a small bias) and within `radius` of the receiver. Output is the
    unoccluded fraction on all three channels.
    """
    _check_resolution(domain, resolution)
    h_e, w_e = domain.shape
    layer = np.zeros((h_e, w_e, 3))
    ys, xs, mx, my = _shaded_set(g, domain)
    m = xs.size
    if m == 0:
        return EffectOutput(layer, 0, 0)

    gx = mx[xs]
    gy = my[ys]
    p = g.position[gy, gx]
    n = _renorm(g.normal[gy, gx])
    d_p = g.depth[gy, gx]
    t, b = _orthobasis(n)
    focal = focal_length_px(g.camera.fov_y, g.height)
    bias = params.occlusion_bias if params.occlusion_bias is not None else 0.02 * params.radius
    w_full, h_full = g.width, g.height

    occ = np.zeros(m)
    for k in range(params.samples):
        u1 = hash01(xs, ys, k, 0, params.seed)
        u2 = hash01(xs, ys, k, 1, params.seed)
        u3 = hash01(xs, ys, k, 2, params.seed)
        rr = np.sqrt(u1)
        ph = (2.0 * math.pi) * u2
        local = np.stack([rr * np.cos(ph), rr * np.sin(ph), np.sqrt(1.0 - u1)], axis=1)
        direction = t * local[:, 0:1] + b * local[:, 1:2] + n * local[:, 2:3]
        q = p + direction * (params.radius * u3)[:, None]
        qz = -q[:, 2]
        front = qz > 1e-9
        qz_safe = np.where(front, qz, 1.0)
        px = w_full * 0.5 + focal * q[:, 0] / qz_safe
        py = h_full * 0.5 - focal * q[:, 1] / qz_safe
        ix = np.floor(px).astype(np.int64)
        iy = np.floor(py).astype(np.int64)
        inb = front & (ix >= 0) & (ix < w_full) & (iy >= 0) & (iy < h_full)
        ixc = np.clip(ix, 0, w_full - 1)
        iyc = np.clip(iy, 0, h_full - 1)
        ds = g.depth[iyc, ixc]
        cov = g.valid[iyc, ixc]
        occ += inb & cov & (qz - ds > bias) & (d_p - ds <= params.radius)

    ao = 1.0 - occ / params.samples
    layer[ys, xs] = np.clip(ao, 0.0, 1.0)[:, None]
    return EffectOutput(layer, params.samples * m, m)


# ---------------------------------------------------------------------------
# soft shadow mapping (percentage-closer filtering)

def pcf_disk(params: EffectParams) -> tuple[np.ndarray, np.ndarray]:
    """Jittered tap offsets in shadow-map texels, shared across all pixels of a run."""
    k = np.arange(params.samples, dtype=np.uint32)
    u1 = hash01(k, np.zeros_like(k), 0, 0, params.seed)
    u2 = hash01(k, np.zeros_like(k), 0, 1, params.seed)
    rad = params.pcf_radius * np.sqrt(u1)
    ang = (2.0 * math.pi) * u2
    return rad * np.cos(ang), rad * np.sin(ang)


def eval_ssm(g: GBuffer, sm: ShadowMap, light: DirectionalLight, params: EffectParams,
             domain: np.ndarray, resolution=None) -> EffectOutput:
    """Soft shadows: visibility is the lit fraction of a jittered PCF disk,
    shaded as albedo * (ambient + visibility * n.l * intensity)."""
    _check_resolution(domain, resolution)
    h_e, w_e = domain.shape
    layer = np.zeros((h_e, w_e, 3))
    ys, xs, mx, my = _shaded_set(g, domain)
    m = xs.size
    if m == 0:
        return EffectOutput(layer, 0, 0)

    gx = mx[xs]
    gy = my[ys]
    n = _renorm(g.normal[gy, gx])
    albedo = g.albedo[gy, gx]
    world = g.world_positions()[gy, gx]
    xn, yn, dl = project_to_light(sm, world)
    res = sm.resolution
    base_u = (xn + 1.0) * 0.5 * res
    base_v = (yn + 1.0) * 0.5 * res

    l_view = _light_dir_view(g, light)
    # slope-scaled bias: taps across the disk see the receiver plane's depth
    # gradient, so the bias must grow with filter radius and surface slant
    cos_t = np.abs(n @ l_view)
    slope = np.sqrt(np.maximum(0.0, 1.0 - cos_t * cos_t)) / np.maximum(cos_t, 0.2)
    bias = params.shadow_bias + (params.pcf_radius + 0.5) * sm.texel_world * slope

    du, dv = pcf_disk(params)
    lit = np.zeros(m)
    for k in range(params.samples):
        tu = np.floor(base_u + du[k]).astype(np.int64)
        tv = np.floor(base_v + dv[k]).astype(np.int64)
        inside = (tu >= 0) & (tu < res) & (tv >= 0) & (tv < res)
        tuc = np.clip(tu, 0, res - 1)
        tvc = np.clip(tv, 0, res - 1)
        stored = sm.depth[tvc, tuc]
        lit += ~inside | (stored >= dl - bias)
    vis = lit / params.samples

    ndl = np.maximum(0.0, -(n @ l_view))
    color = albedo * (light.ambient[None, :] + (vis * ndl)[:, None] * light.intensity[None, :])
    layer[ys, xs] = np.clip(color, 0.0, 1.0)
    return EffectOutput(layer, params.samples * m, m)


# ---------------------------------------------------------------------------
# one-bounce indirect illumination

def eval_ssgi(g: GBuffer, sm: ShadowMap, light: DirectionalLight, params: EffectParams,
              domain: np.ndarray, resolution=None) -> EffectOutput:
    """Screen-space one-bounce gather; the output holds only the indirect term.

    Sample pixels are drawn in the screen-space disk that `radius` subtends at
    the receiver's depth; each directly lit sample contributes its radiance
    weighted by a squared-distance form factor with clamped cosines.
    """
    _check_resolution(domain, resolution)
    h_e, w_e = domain.shape
    layer = np.zeros((h_e, w_e, 3))
    ys, xs, mx, my = _shaded_set(g, domain)
    m = xs.size
    if m == 0:
        return EffectOutput(layer, 0, 0)

    gx = mx[xs]
    gy = my[ys]
    p = g.position[gy, gx]
    n = _renorm(g.normal[gy, gx])
    albedo = g.albedo[gy, gx]
    d_p = g.depth[gy, gx]
    f_eval = focal_length_px(g.camera.fov_y, h_e)
    r_px = params.radius * f_eval / d_p
    l_view = _light_dir_view(g, light)
    eps = 1e-4 * params.radius * params.radius
    world_rot = g.world_from_view[:3, :3]
    world_off = g.world_from_view[:3, 3]

    acc = np.zeros((m, 3))
    for k in range(params.samples):
        u1 = hash01(xs, ys, k, 0, params.seed)
        u2 = hash01(xs, ys, k, 1, params.seed)
        rr = r_px * np.sqrt(u1)
        ph = (2.0 * math.pi) * u2
        sx = np.floor(xs + 0.5 + rr * np.cos(ph)).astype(np.int64)
        sy = np.floor(ys + 0.5 + rr * np.sin(ph)).astype(np.int64)
        inb = (sx >= 0) & (sx < w_e) & (sy >= 0) & (sy < h_e)
        sxc = np.clip(sx, 0, w_e - 1)
        syc = np.clip(sy, 0, h_e - 1)
        gx2 = mx[sxc]
        gy2 = my[syc]
        ok = inb & g.valid[gy2, gx2]

        p_y = g.position[gy2, gx2]
        n_y = _renorm(g.normal[gy2, gx2])
        alb_y = g.albedo[gy2, gx2]
        delta = p_y - p
        d2 = np.sum(delta * delta, axis=1)
        ok &= d2 > 1e-12
        dist = np.sqrt(np.where(d2 > 1e-12, d2, 1.0))
        omega = delta / dist[:, None]

        world_y = p_y @ world_rot.T + world_off
        vis_y = shadow_test_hard(sm, world_y, params.shadow_bias)
        cos_y_l = np.maximum(0.0, -(n_y @ l_view))
        radiance = alb_y * (vis_y * cos_y_l)[:, None] * light.intensity[None, :]

        geom = np.maximum(0.0, np.sum(n * omega, axis=1)) * \
            np.maximum(0.0, -np.sum(n_y * omega, axis=1)) / (eps + d2)
        acc += np.where(ok[:, None], radiance * geom[:, None], 0.0)

    out = albedo * acc * (params.radius * params.radius / params.samples)
    layer[ys, xs] = np.clip(out, 0.0, 1.0)
    return EffectOutput(layer, params.samples * m, m)


def eval_effect(kind: EffectKind, g: GBuffer, sm: ShadowMap | None, light: DirectionalLight,
                params: EffectParams, domain: np.ndarray) -> EffectOutput:
    kind = EffectKind(kind)
    if kind is EffectKind.SSAO:
        return eval_ssao(g, params, domain)
    if sm is None:
        raise ValueError(f"{kind.value} requires a shadow map")
    if kind is EffectKind.SSM:
        return eval_ssm(g, sm, light, params, domain)
    return eval_ssgi(g, sm, light, params, domain)
