"""Image primitives shared by the whole renderer.

An image is a numpy float array of shape (height, width) for scalar data or
(height, width, 3) for color/vector data, stored row-major: pixel (x, y)
lives at ``img[y, x]``. The center of texel (x, y) maps to the normalized
coordinate u = (x + 0.5) / width, v = (y + 0.5) / height, and addressing is
clamp-to-edge everywhere; samples never read outside the border texels.
Images are treated as immutable once produced by a pipeline stage.
"""

from __future__ import annotations

import numpy as np


def texel(img: np.ndarray, x: int, y: int):
    """Bounds-checked texel read. Out-of-bounds access is a bug, never a clamp."""
    h, w = img.shape[:2]
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"texel ({x}, {y}) outside {w}x{h} image")
    return img[y, x]


def _snap_to_centers(c: np.ndarray) -> np.ndarray:
    # Queries that land on a texel center up to float rounding must return the
    # stored value exactly; snap within 1e-9 texels.
    r = np.round(c)
    return np.where(np.abs(c - r) < 1e-9, r, c)


def _lerp2(img: np.ndarray, cx, cy) -> np.ndarray:
    """Bilinear fetch at continuous texel coordinates (texel centers at integers)."""
    h, w = img.shape[:2]
    cx = _snap_to_centers(np.asarray(cx, dtype=np.float64))
    cy = _snap_to_centers(np.asarray(cy, dtype=np.float64))
    x0 = np.floor(cx)
    y0 = np.floor(cy)
    fx = cx - x0
    fy = cy - y0
    x0i = np.clip(x0, 0, w - 1).astype(np.intp)
    x1i = np.clip(x0 + 1, 0, w - 1).astype(np.intp)
    y0i = np.clip(y0, 0, h - 1).astype(np.intp)
    y1i = np.clip(y0 + 1, 0, h - 1).astype(np.intp)
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = img[y0i, x0i] * (1.0 - fx) + img[y0i, x1i] * fx
    bot = img[y1i, x0i] * (1.0 - fx) + img[y1i, x1i] * fx
    return top * (1.0 - fy) + bot * fy


def sample_bilinear(img: np.ndarray, u, v):
    """Sample at normalized (u, v) with bilinear filtering and clamp-to-edge.

    Accepts scalars or arrays for u/v. Sampling exactly at a texel center
    returns the stored value bit-for-bit.
    """
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("empty image")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("non-finite sample coordinates")
    h, w = img.shape[:2]
    return _lerp2(img, u * w - 0.5, v * h - 0.5)


def sample_nearest(img: np.ndarray, u, v):
    """Nearest-texel sample at normalized (u, v), clamp-to-edge."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("non-finite sample coordinates")
    h, w = img.shape[:2]
    xi = np.clip(np.floor(u * w), 0, w - 1).astype(np.intp)
    yi = np.clip(np.floor(v * h), 0, h - 1).astype(np.intp)
    return img[yi, xi]


def upsample(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinearly scale up to (target_w, target_h).

    Output texel (x, y) samples the source at ((x+0.5)/target_w, (y+0.5)/target_h).
    Downscaling is a different operation and is rejected here.
    """
    h, w = img.shape[:2]
    if target_w < w or target_h < h:
        raise ValueError(f"upsample target {target_w}x{target_h} smaller than source {w}x{h}")
    if target_w == w and target_h == h:
        return img.copy()
    # target texel centers expressed in source texel coordinates
    cx = (np.arange(target_w) + 0.5) * (w / target_w) - 0.5
    cy = (np.arange(target_h) + 0.5) * (h / target_h) - 0.5
    return _lerp2(img, cx[None, :], cy[:, None])


def upscale_nearest(img: np.ndarray, factor: int, target_w: int | None = None, target_h: int | None = None) -> np.ndarray:
    """Integer nearest-neighbor upscale, cropped to an optional target size (for mask viz)."""
    out = np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)
    if target_w is not None and target_h is not None:
        out = out[:target_h, :target_w]
    return out
