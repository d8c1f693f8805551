"""Scene description, camera G-buffer rasterization, and shadow-map generation.

Geometry is a triangle soup with per-vertex normals and per-triangle albedo.
The camera rasterizer produces a deferred-shading G-buffer whose depth channel
is *linear* view-space depth (distance along the view axis), which keeps the
second derivative of depth flat on planar surfaces. The shadow path renders an
orthographic depth map from a directional light fitted to the scene bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SceneError(ValueError):
    """Malformed scene data or a degenerate camera/light setup."""


def _unit(v, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if not np.isfinite(n) or n < 1e-12:
        raise SceneError(f"{what} must have nonzero finite length")
    return v / n


@dataclass
class Camera:
    position: np.ndarray
    view_dir: np.ndarray  # unit vector toward the scene
    up: np.ndarray
    fov_y: float          # vertical field of view in radians
    near: float
    far: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.view_dir = _unit(self.view_dir, "camera view_dir")
        self.up = _unit(self.up, "camera up")
        if not (0.0 < self.fov_y < math.pi):
            raise SceneError(f"fov_y {self.fov_y} outside (0, pi)")
        if not (self.near > 0.0 and self.far > self.near):
            raise SceneError("camera requires 0 < near < far")

    def basis(self):
        """Right-handed (right, up, forward) basis; fails if view_dir is collinear with up."""
        f = self.view_dir
        r = np.cross(f, self.up)
        rn = np.linalg.norm(r)
        if rn < 1e-8:
            raise SceneError("camera view direction is collinear with up")
        r = r / rn
        u = np.cross(r, f)
        return r, u, f


@dataclass
class DirectionalLight:
    direction: np.ndarray  # unit vector from the light toward the scene
    intensity: np.ndarray  # rgb, >= 0
    ambient: np.ndarray    # rgb, >= 0

    def __post_init__(self):
        self.direction = _unit(self.direction, "light direction")
        self.intensity = np.asarray(self.intensity, dtype=np.float64)
        self.ambient = np.asarray(self.ambient, dtype=np.float64)
        if np.any(self.intensity < 0) or np.any(self.ambient < 0):
            raise SceneError("light intensity/ambient must be >= 0")


@dataclass
class Scene:
    vertices: np.ndarray  # (T, 3, 3) world-space triangle corners
    normals: np.ndarray   # (T, 3, 3) unit vertex normals
    albedo: np.ndarray    # (T, 3) rgb in [0, 1]
    camera: Camera
    light: DirectionalLight
    defaults: dict = field(default_factory=dict)  # optional per-effect parameter overrides

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.normals = np.asarray(self.normals, dtype=np.float64)
        self.albedo = np.asarray(self.albedo, dtype=np.float64)
        if self.vertices.ndim != 3 or self.vertices.shape[0] < 1 or self.vertices.shape[1:] != (3, 3):
            raise SceneError("scene needs at least one triangle of shape (3, 3)")
        if self.normals.shape != self.vertices.shape:
            raise SceneError("normals must match vertices in shape")
        if self.albedo.shape != (self.vertices.shape[0], 3):
            raise SceneError("albedo must be one rgb triple per triangle")
        lens = np.linalg.norm(self.normals, axis=-1)
        if np.any(np.abs(lens - 1.0) > 1e-4):
            raise SceneError("vertex normals must be unit length within 1e-4")
        if np.any(self.albedo < 0) or np.any(self.albedo > 1):
            raise SceneError("albedo must lie in [0, 1]")

    def bounds(self):
        pts = self.vertices.reshape(-1, 3)
        return pts.min(axis=0), pts.max(axis=0)

    def diagonal(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))


def load_scene(path) -> Scene:
    """Parse a scene JSON document (see README for the schema)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"invalid scene JSON: {exc}") from exc
    return scene_from_dict(doc)


def scene_from_dict(doc: dict) -> Scene:
    try:
        tris = doc["triangles"]
        cam = doc["camera"]
        light = doc["light"]
        vertices = np.array([t["v"] for t in tris], dtype=np.float64)
        normals = np.array([t["n"] for t in tris], dtype=np.float64)
        albedo = np.array([t["albedo"] for t in tris], dtype=np.float64)
        camera = Camera(
            position=cam["position"],
            view_dir=cam["view_dir"],
            up=cam["up"],
            fov_y=math.radians(float(cam["fov_y_deg"])),
            near=float(cam["near"]),
            far=float(cam["far"]),
        )
        lamp = DirectionalLight(
            direction=light["direction"],
            intensity=light["intensity"],
            ambient=light["ambient"],
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise SceneError(f"scene document missing or malformed field: {exc}") from exc
    return Scene(vertices, normals, albedo, camera, lamp, defaults=doc.get("defaults", {}))


@dataclass
class GBuffer:
    position: np.ndarray  # (H, W, 3) view-space position
    depth: np.ndarray     # (H, W) linear view-space depth along the view axis
    normal: np.ndarray    # (H, W, 3) view-space unit normal
    albedo: np.ndarray    # (H, W, 3)
    valid: np.ndarray     # (H, W) bool, True where geometry covers the pixel
    camera: Camera
    view_from_world: np.ndarray  # (4, 4)
    world_from_view: np.ndarray  # (4, 4)

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    def world_positions(self) -> np.ndarray:
        """View-space positions mapped back to world space, shape (H, W, 3)."""
        rot = self.world_from_view[:3, :3]
        off = self.world_from_view[:3, 3]
        return self.position @ rot.T + off


@dataclass
class ShadowMap:
    depth: np.ndarray          # (R, R) distance along the light direction
    world_to_light: np.ndarray  # (4, 4) affine: world -> (ndc_x, ndc_y, light_depth, 1)
    resolution: int
    texel_world: float = 0.0   # world-space extent of one texel (larger frustum axis)


def _view_matrices(camera: Camera):
    r, u, f = camera.basis()
    rot = np.stack([r, u, -f])  # world direction -> view direction
    view_from_world = np.eye(4)
    view_from_world[:3, :3] = rot
    view_from_world[:3, 3] = -rot @ camera.position
    world_from_view = np.eye(4)
    world_from_view[:3, :3] = rot.T
    world_from_view[:3, 3] = camera.position
    return view_from_world, world_from_view


def focal_length_px(fov_y: float, height: int) -> float:
    """Vertical focal length in pixels for a given image height."""
    return (height * 0.5) / math.tan(fov_y * 0.5)


def _clip_near(pts, attrs, near: float):
    """Sutherland-Hodgman clip of one view-space triangle against z = -near.

    Returns (points, attrs) polygon lists; attributes interpolate linearly in
    view space which is exact for clipping.
    """
    out_p, out_a = [], []
    for i in range(3):
        a, b = pts[i], pts[(i + 1) % 3]
        aa, ba = attrs[i], attrs[(i + 1) % 3]
        a_in = a[2] <= -near
        b_in = b[2] <= -near
        if a_in:
            out_p.append(a)
            out_a.append(aa)
        if a_in != b_in:
            t = (-near - a[2]) / (b[2] - a[2])
            out_p.append(a + t * (b - a))
            out_a.append(aa + t * (ba - aa))
    return out_p, out_a


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def rasterize_gbuffer(scene: Scene, width: int, height: int) -> GBuffer:
    """Perspective, z-buffered rasterization of the scene into a G-buffer.

    Per-pixel attributes are perspective-correct barycentric interpolations;
    back-face culling is off and the depth test is "less". Uncovered pixels
    carry the background sentinel (depth=far, normal=(0,0,1), albedo=0,
    position=(0,0,-far)).
    """
    if width < 8 or height < 8:
        raise ValueError("gbuffer resolution must be at least 8x8")
    cam = scene.camera
    view_from_world, world_from_view = _view_matrices(cam)
    rot = view_from_world[:3, :3]
    off = view_from_world[:3, 3]
    focal = focal_length_px(cam.fov_y, height)

    zbuf = np.full((height, width), np.inf)
    pos = np.zeros((height, width, 3))
    nrm = np.zeros((height, width, 3))
    alb = np.zeros((height, width, 3))

    verts_view = scene.vertices @ rot.T + off      # (T, 3, 3)
    norms_view = scene.normals @ rot.T             # (T, 3, 3)

    for ti in range(scene.vertices.shape[0]):
        # attribute rows: view position (3), view normal (3)
        attrs = np.concatenate([verts_view[ti], norms_view[ti]], axis=1)  # (3, 6)
        poly_p, poly_a = _clip_near(verts_view[ti], attrs, cam.near)
        for j in range(1, len(poly_p) - 1):
            tri_p = np.stack([poly_p[0], poly_p[j], poly_p[j + 1]])
            tri_a = np.stack([poly_a[0], poly_a[j], poly_a[j + 1]])
            _raster_triangle(zbuf, pos, nrm, alb, tri_p, tri_a, scene.albedo[ti], focal, width, height)

    valid = zbuf <= cam.far * (1.0 + 1e-12)
    depth = np.where(valid, zbuf, cam.far)
    # renormalize interpolated normals where covered, sentinel elsewhere
    lens = np.linalg.norm(nrm, axis=-1)
    safe = np.where(valid & (lens > 1e-12), lens, 1.0)
    nrm = nrm / safe[..., None]
    nrm[~valid] = (0.0, 0.0, 1.0)
    alb[~valid] = 0.0
    pos[~valid] = (0.0, 0.0, -cam.far)
    return GBuffer(pos, depth, nrm, alb, valid, cam, view_from_world, world_from_view)


def _raster_triangle(zbuf, pos, nrm, alb, tri_p, tri_a, albedo, focal, width, height):
    z = tri_p[:, 2]
    iw = 1.0 / (-z)  # positive after near clipping
    sx = width * 0.5 + focal * tri_p[:, 0] * iw
    sy = height * 0.5 - focal * tri_p[:, 1] * iw

    area = _edge(sx[0], sy[0], sx[1], sy[1], sx[2], sy[2])
    if abs(area) < 1e-12:
        return
    x0 = max(0, int(math.floor(sx.min())))
    x1 = min(width - 1, int(math.ceil(sx.max())))
    y0 = max(0, int(math.floor(sy.min())))
    y1 = min(height - 1, int(math.ceil(sy.max())))
    if x1 < x0 or y1 < y0:
        return

    px = np.arange(x0, x1 + 1) + 0.5
    py = np.arange(y0, y1 + 1) + 0.5
    PX, PY = np.meshgrid(px, py)
    l0 = _edge(sx[1], sy[1], sx[2], sy[2], PX, PY) / area
    l1 = _edge(sx[2], sy[2], sx[0], sy[0], PX, PY) / area
    l2 = _edge(sx[0], sy[0], sx[1], sy[1], PX, PY) / area
    inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
    if not inside.any():
        return

    iw_p = l0 * iw[0] + l1 * iw[1] + l2 * iw[2]
    depth = 1.0 / np.where(iw_p > 1e-300, iw_p, 1e-300)
    sub = (slice(y0, y1 + 1), slice(x0, x1 + 1))
    win = inside & (depth < zbuf[sub])
    if not win.any():
        return

    w0 = l0 * iw[0] / iw_p
    w1 = l1 * iw[1] / iw_p
    w2 = l2 * iw[2] / iw_p
    interp = (w0[..., None] * tri_a[0] + w1[..., None] * tri_a[1] + w2[..., None] * tri_a[2])

    zbuf[sub][win] = depth[win]
    pos[sub][win] = interp[win][:, 0:3]
    nrm[sub][win] = interp[win][:, 3:6]
    alb[sub][win] = albedo


def _light_basis(direction: np.ndarray):
    f = _unit(direction, "light direction")
    helper = np.array([0.0, 0.0, 1.0]) if abs(f[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    r = _unit(np.cross(helper, f), "light basis")
    u = np.cross(f, r)
    return r, u, f


def rasterize_shadowmap(scene: Scene, resolution: int) -> ShadowMap:
    """Orthographic depth render from the light, frustum fitted to the scene bounds."""
    if resolution < 8:
        raise ValueError("shadow map resolution must be at least 8")
    if scene.vertices.size == 0:
        raise SceneError("cannot fit a light frustum to an empty scene")
    r, u, f = _light_basis(scene.light.direction)

    pts = scene.vertices.reshape(-1, 3)
    a = pts @ r
    b = pts @ u
    d = pts @ f
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(d))):
        raise SceneError("scene geometry is not finite")
    span = max(a.max() - a.min(), b.max() - b.min(), 1e-6)
    pad = span * 2.0 / resolution + 1e-9  # a couple of texels of margin
    a0, a1 = a.min() - pad, a.max() + pad
    b0, b1 = b.min() - pad, b.max() + pad

    dbuf = np.full((resolution, resolution), np.inf)
    sa = resolution / (a1 - a0)
    sb = resolution / (b1 - b0)
    va = scene.vertices @ r
    vb = scene.vertices @ u
    vd = scene.vertices @ f
    for ti in range(scene.vertices.shape[0]):
        sx = (va[ti] - a0) * sa
        sy = (vb[ti] - b0) * sb
        _raster_depth_ortho(dbuf, sx, sy, vd[ti], resolution)

    # empty texels sit behind everything so they never shadow real points
    far_d = d.max() + span
    dbuf[~np.isfinite(dbuf)] = far_d

    world_to_light = np.eye(4)
    world_to_light[0, :3] = 2.0 * r / (a1 - a0)
    world_to_light[0, 3] = -2.0 * a0 / (a1 - a0) - 1.0
    world_to_light[1, :3] = 2.0 * u / (b1 - b0)
    world_to_light[1, 3] = -2.0 * b0 / (b1 - b0) - 1.0
    world_to_light[2, :3] = f
    world_to_light[2, 3] = 0.0
    texel_world = max(a1 - a0, b1 - b0) / resolution
    return ShadowMap(dbuf, world_to_light, resolution, texel_world)


def _raster_depth_ortho(dbuf, sx, sy, dz, res):
    area = _edge(sx[0], sy[0], sx[1], sy[1], sx[2], sy[2])
    if abs(area) < 1e-12:
        return
    x0 = max(0, int(math.floor(sx.min())))
    x1 = min(res - 1, int(math.ceil(sx.max())))
    y0 = max(0, int(math.floor(sy.min())))
    y1 = min(res - 1, int(math.ceil(sy.max())))
    if x1 < x0 or y1 < y0:
        return
    px = np.arange(x0, x1 + 1) + 0.5
    py = np.arange(y0, y1 + 1) + 0.5
    PX, PY = np.meshgrid(px, py)
    l0 = _edge(sx[1], sy[1], sx[2], sy[2], PX, PY) / area
    l1 = _edge(sx[2], sy[2], sx[0], sy[0], PX, PY) / area
    l2 = _edge(sx[0], sy[0], sx[1], sy[1], PX, PY) / area
    inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2 >= -1e-12)
    if not inside.any():
        return
    depth = l0 * dz[0] + l1 * dz[1] + l2 * dz[2]
    sub = (slice(y0, y1 + 1), slice(x0, x1 + 1))
    win = inside & (depth < dbuf[sub])
    dbuf[sub][win] = depth[win]


def project_to_light(sm: ShadowMap, world_pos: np.ndarray):
    """World positions -> (ndc_x, ndc_y, light-space depth)."""
    p = np.asarray(world_pos, dtype=np.float64)
    m = sm.world_to_light
    h = p @ m[:3, :3].T + m[:3, 3]
    return h[..., 0], h[..., 1], h[..., 2]


def shadow_test_hard(sm: ShadowMap, world_pos: np.ndarray, bias: float = 0.0):
    """One-sample hard shadow test; True means lit.

    Uses nearest-texel lookup; positions outside the light frustum count as lit.
    """
    if bias < 0:
        raise ValueError("bias must be >= 0")
    xn, yn, dl = project_to_light(sm, world_pos)
    res = sm.resolution
    inside = (np.abs(xn) <= 1.0) & (np.abs(yn) <= 1.0)
    tx = np.clip(np.floor((xn + 1.0) * 0.5 * res), 0, res - 1).astype(np.intp)
    ty = np.clip(np.floor((yn + 1.0) * 0.5 * res), 0, res - 1).astype(np.intp)
    stored = sm.depth[ty, tx]
    return ~inside | (stored >= dl - bias)


def default_shadow_bias(scene: Scene) -> float:
    """Depth-compare bias scaled to the scene: 1e-3 of the bounding diagonal."""
    return 1e-3 * scene.diagonal()
