"""Independent oracles and scene builders used by the test suite.

Everything here deliberately avoids the library's rendering code paths:
depth comes from per-pixel ray casting (Moller-Trumbore), occlusion from
geometric hemisphere rays, blurs from dense 2-D convolution, and bilinear
values from a direct per-pixel weight evaluation.
"""

from __future__ import annotations

import math

import numpy as np

from mrshade.scene import Camera, DirectionalLight, Scene, focal_length_px


# ---------------------------------------------------------------------------
# scene builders

def quads_to_arrays(*qs):
    verts, norms, albs = [], [], []
    for (p0, p1, p2, p3, n, a) in qs:
        for tri in ([p0, p1, p2], [p0, p2, p3]):
            verts.append(tri)
            norms.append([n] * 3)
            albs.append(a)
    return (np.array(verts, dtype=np.float64), np.array(norms, dtype=np.float64),
            np.array(albs, dtype=np.float64))


def make_scene(quads, camera, light):
    verts, norms, albs = quads_to_arrays(*quads)
    return Scene(verts, norms, albs, camera, light)


def frontal_plane_scene(distance=4.0, half_w=6.0, half_h=4.0, albedo=(0.85, 0.85, 0.85)):
    """Screen-filling quad perpendicular to the view axis at the given distance."""
    cam = Camera(position=(0, 0, distance), view_dir=(0, 0, -1), up=(0, 1, 0),
                 fov_y=math.radians(50), near=0.1, far=50)
    light = DirectionalLight(direction=(0.3, -0.5, -0.8), intensity=(1, 1, 1),
                             ambient=(0.2, 0.2, 0.2))
    q = ((-half_w, -half_h, 0), (half_w, -half_h, 0), (half_w, half_h, 0),
         (-half_w, half_h, 0), (0, 0, 1), albedo)
    return make_scene([q], cam, light)


def tilted_plane_scene():
    """45-degree ramp framed gently enough that linear depth is near-linear per column."""
    cam = Camera(position=(0, 0, 0), view_dir=(0, 0, -1), up=(0, 1, 0),
                 fov_y=math.radians(16), near=0.1, far=50)
    light = DirectionalLight(direction=(0, -0.6, -0.8), intensity=(1, 1, 1),
                             ambient=(0.2, 0.2, 0.2))
    # plane through (0, 0, -5) with normal (0, 1, 1)/sqrt(2): y + z = -5
    q = ((-4, 3.0, -8.0), (4, 3.0, -8.0), (4, -3.0, -2.0), (-4, -3.0, -2.0),
         (0, 1 / math.sqrt(2), 1 / math.sqrt(2)), (0.8, 0.8, 0.8))
    return make_scene([q], cam, light)


def corner_scene():
    """Interior corner (floor + red wall) framed tightly; used at 16x16."""
    cam = Camera(position=(0, 1.1, 1.6), view_dir=(0, -0.3, -1), up=(0, 1, 0),
                 fov_y=math.radians(55), near=0.05, far=30)
    light = DirectionalLight(direction=(-0.2, -0.8, -0.55), intensity=(1, 1, 1),
                             ambient=(0.2, 0.2, 0.2))
    quads = [
        ((-4, 0, 3), (4, 0, 3), (4, 0, -1), (-4, 0, -1), (0, 1, 0), (1.0, 1.0, 1.0)),
        ((-4, 0, -1), (4, 0, -1), (4, 5, -1), (-4, 5, -1), (0, 0, 1), (0.9, 0.15, 0.1)),
    ]
    return make_scene(quads, cam, light)


def penumbra_scene():
    """Flat floor plus a raised slab with a straight edge; the tilted light puts
    the penumbra on open floor, clear of the slab's own silhouette."""
    cam = Camera(position=(1.5, 5, 0), view_dir=(0, -1, 0), up=(0, 0, -1),
                 fov_y=math.radians(27), near=0.1, far=20)
    light = DirectionalLight(direction=(0.35, -0.9, 0), intensity=(1, 1, 1),
                             ambient=(0, 0, 0))
    quads = [
        ((-5, 0, 5), (5, 0, 5), (5, 0, -5), (-5, 0, -5), (0, 1, 0), (1, 1, 1)),
        ((-5, 2, 5), (0, 2, 5), (0, 2, -5), (-5, 2, -5), (0, 1, 0), (0.5, 0.5, 0.5)),
    ]
    return make_scene(quads, cam, light)


def sphere_quads(center, radius, n_lat=8, n_lon=16, albedo=(0.7, 0.7, 0.7)):
    """UV-sphere triangle soup with analytic (outward) vertex normals."""
    cx, cy, cz = center
    verts, norms, albs = [], [], []

    def pt(i, j):
        th = math.pi * i / n_lat
        ph = 2 * math.pi * j / n_lon
        n = np.array([math.sin(th) * math.cos(ph), math.cos(th), math.sin(th) * math.sin(ph)])
        return np.array([cx, cy, cz]) + radius * n, n

    for i in range(n_lat):
        for j in range(n_lon):
            p00, n00 = pt(i, j)
            p01, n01 = pt(i, j + 1)
            p10, n10 = pt(i + 1, j)
            p11, n11 = pt(i + 1, j + 1)
            if i > 0:
                verts.append([p00, p01, p11]); norms.append([n00, n01, n11]); albs.append(albedo)
            if i < n_lat - 1:
                verts.append([p00, p11, p10]); norms.append([n00, n11, n10]); albs.append(albedo)
    return np.array(verts), np.array(norms), np.array(albs)


# ---------------------------------------------------------------------------
# ray casting

def view_rays(camera: Camera, width: int, height: int):
    """World-space ray directions through pixel centers, scaled so the ray
    parameter t equals linear view-space depth."""
    r, u, f = camera.basis()
    focal = focal_length_px(camera.fov_y, height)
    xi = (np.arange(width) + 0.5 - width * 0.5) / focal
    ups = -(np.arange(height) + 0.5 - height * 0.5) / focal
    XI, UP = np.meshgrid(xi, ups)
    return XI[..., None] * r + UP[..., None] * u + f


def ray_triangle_t(origin, dirs, tri, eps=1e-12):
    """Moller-Trumbore; returns the ray parameter per direction (inf on miss)."""
    v0, v1, v2 = (np.asarray(v, dtype=np.float64) for v in tri)
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(dirs, e2)
    det = pvec @ e1
    ok = np.abs(det) > eps
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = np.asarray(origin, dtype=np.float64) - v0
    uu = (pvec @ tvec) * inv
    qvec = np.cross(tvec, e1)
    vv = (dirs @ qvec) * inv
    tt = (e2 @ qvec) * inv
    hit = ok & (uu >= -1e-9) & (vv >= -1e-9) & (uu + vv <= 1 + 1e-9) & (tt > 1e-9)
    return np.where(hit, tt, np.inf)


def ray_cast_depth(scene: Scene, width: int, height: int):
    """Per-pixel linear view depth and coverage from brute-force ray casting."""
    dirs = view_rays(scene.camera, width, height)
    t_best = np.full((height, width), np.inf)
    for tri in scene.vertices:
        t_best = np.minimum(t_best, ray_triangle_t(scene.camera.position, dirs, tri))
    covered = (t_best >= scene.camera.near) & (t_best <= scene.camera.far)
    return t_best, covered


def any_hit_within(scene: Scene, origins, dirs, max_t):
    """True per ray when any triangle is hit closer than max_t (for AO rays)."""
    hit = np.zeros(dirs.shape[:-1], dtype=bool)
    for tri in scene.vertices:
        v0, v1, v2 = tri
        e1 = v1 - v0
        e2 = v2 - v0
        pvec = np.cross(dirs, e2)
        det = pvec @ e1
        ok = np.abs(det) > 1e-12
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = origins - v0
        uu = np.sum(pvec * tvec, axis=-1) * inv
        qvec = np.cross(tvec, e1)
        vv = np.sum(dirs * qvec, axis=-1) * inv
        tt = np.sum(e2 * qvec, axis=-1) * inv
        hit |= ok & (uu >= -1e-9) & (vv >= -1e-9) & (uu + vv <= 1 + 1e-9) & \
            (tt > 1e-9) & (tt <= max_t)
    return hit


def ao_ray_cast(scene: Scene, points, normals, radius, n_rays=256, seed=0):
    """Geometric ambient occlusion: cosine-weighted hemisphere rays, occluded
    when any geometry lies within the radius. Returns 1 - occluded fraction."""
    rng = np.random.default_rng(seed)
    m = points.shape[0]
    helper = np.where(np.abs(normals[:, 2:3]) < 0.999, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    t = np.cross(helper, normals)
    t /= np.linalg.norm(t, axis=-1, keepdims=True)
    b = np.cross(normals, t)
    occ = np.zeros(m)
    for _ in range(n_rays):
        u1 = rng.random(m)
        u2 = rng.random(m)
        rr = np.sqrt(u1)
        ph = 2 * math.pi * u2
        d = (t * (rr * np.cos(ph))[:, None] + b * (rr * np.sin(ph))[:, None]
             + normals * np.sqrt(1 - u1)[:, None])
        origins = points + normals * 1e-4
        occ += any_hit_within(scene, origins, d, radius)
    return 1.0 - occ / n_rays


# ---------------------------------------------------------------------------
# image-processing references

def bilinear_reference(img: np.ndarray, u: float, v: float):
    """Direct evaluation of the 4-weight clamp-to-edge bilinear formula."""
    h, w = img.shape[:2]
    cx = u * w - 0.5
    cy = v * h - 0.5
    x0 = math.floor(cx)
    y0 = math.floor(cy)
    fx = cx - x0
    fy = cy - y0
    out = 0.0
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            xs = min(max(x0 + dx, 0), w - 1)
            ys = min(max(y0 + dy, 0), h - 1)
            out = out + wx * wy * img[ys, xs]
    return out


def gaussian_blur_reference(img: np.ndarray, variance: float) -> np.ndarray:
    """Dense 2-D Gaussian convolution (clamped borders) as an independent route."""
    sigma = math.sqrt(variance)
    r = math.ceil(3 * sigma)
    ax = np.arange(-r, r + 1, dtype=np.float64)
    k2 = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * variance))
    k2 /= k2.sum()
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    out = np.zeros_like(img, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            out[y, x] = np.sum(k2 * padded[y:y + 2 * r + 1, x:x + 2 * r + 1])
    return np.clip(out, 0.0, 1.0)


def ssgi_full_gather(g, sm, light, params):
    """Deterministic expectation of the indirect-gather estimator: average the
    integrand over every pixel inside each receiver's screen-space disk."""
    from mrshade.effects import _grid_to_full, _light_dir_view, _renorm
    from mrshade.scene import shadow_test_hard

    h, w = g.depth.shape
    mx = _grid_to_full(g.width, w)
    my = _grid_to_full(g.height, h)
    f_eval = focal_length_px(g.camera.fov_y, h)
    l_view = _light_dir_view(g, light)
    eps = 1e-4 * params.radius ** 2
    rot = g.world_from_view[:3, :3]
    off = g.world_from_view[:3, 3]

    # per-pixel direct radiance (same one-sample shadow model as the estimator)
    pos = g.position[np.ix_(my, mx)]
    nrm = _renorm(g.normal[np.ix_(my, mx)])
    alb = g.albedo[np.ix_(my, mx)]
    world = pos @ rot.T + off
    vis = shadow_test_hard(sm, world.reshape(-1, 3), params.shadow_bias).reshape(h, w)
    cos_l = np.maximum(0.0, -(nrm @ l_view))
    radiance = alb * (vis * cos_l)[..., None] * light.intensity[None, None, :]

    out = np.zeros((h, w, 3))
    for y in range(h):
        for x in range(w):
            if not g.valid[my[y], mx[x]]:
                continue
            p = pos[y, x]
            n = nrm[y, x]
            r_px = params.radius * f_eval / g.depth[my[y], mx[x]]
            acc = np.zeros(3)
            count = 0
            y0 = max(0, int(y - r_px - 1))
            y1 = min(h, int(y + r_px + 2))
            x0 = max(0, int(x - r_px - 1))
            x1 = min(w, int(x + r_px + 2))
            for sy in range(y0, y1):
                for sx in range(x0, x1):
                    if (sx - x) ** 2 + (sy - y) ** 2 > r_px ** 2:
                        continue
                    count += 1
                    if (sx == x and sy == y) or not g.valid[my[sy], mx[sx]]:
                        continue
                    delta = pos[sy, sx] - p
                    d2 = float(delta @ delta)
                    if d2 < 1e-12:
                        continue
                    omega = delta / math.sqrt(d2)
                    geom = max(0.0, float(n @ omega)) * max(0.0, float(-nrm[sy, sx] @ omega)) / (eps + d2)
                    acc += radiance[sy, sx] * geom
            if count:
                out[y, x] = alb[y, x] * acc * (params.radius ** 2 / count)
    return np.clip(out, 0.0, 1.0)
