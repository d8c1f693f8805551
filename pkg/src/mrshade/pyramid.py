"""Per-level alpha masks and stencils from the full-resolution edge image.

Each level downsamples the edge mask with a max-pool (so a one-pixel edge can
never be diluted away), blurs it with the level's Gaussian variance, and
thresholds at > 0 for the stencil. The decomposition is inclusive: every
finer level's footprint is raised into all coarser levels, and the coarsest
level always covers the whole frame, so no pixel is left unrendered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import upscale_nearest
from .mask import EdgeImage

# fixed four-level ladder: full, half, quarter, eighth resolution per axis
LEVEL_DIVISORS = {1: 1, 2: 2, 3: 4, 4: 8}
COARSEST_LEVEL = 4


@dataclass
class LevelConfig:
    index: int
    variance: float          # Gaussian blur variance applied to the downsampled mask
    weight: float            # blend weight multiplied into the alpha at composite time
    enabled: bool = True
    divisor: int | None = None

    def __post_init__(self):
        if self.index not in LEVEL_DIVISORS:
            raise ValueError(f"level index {self.index} outside the 1..4 ladder")
        want = LEVEL_DIVISORS[self.index]
        if self.divisor is None:
            self.divisor = want
        elif self.divisor != want:
            raise ValueError(f"level {self.index} must use divisor {want}")
        if self.variance < 0:
            raise ValueError("variance must be >= 0")
        if self.weight <= 0:
            raise ValueError("weight must be > 0")


# per-effect blur variances and blend weights (effect name -> per-level settings);
# the indirect-illumination profile skips the half-resolution level entirely
DEFAULT_LEVELS = {
    "ssao": [(0.924, 100.0, True), (1.848, 50.0, True), (3.696, 20.0, True), (0.0, 1.0, True)],
    "ssm": [(0.924, 1000.0, True), (1.848, 1000.0, True), (3.696, 1000.0, True), (0.0, 1.0, True)],
    "ssgi": [(0.924, 1000.0, True), (1.848, 1.0, False), (0.924, 100.0, True), (0.0, 1.0, True)],
}


def default_levels(effect: str) -> list[LevelConfig]:
    key = str(effect).lower()
    if key not in DEFAULT_LEVELS:
        raise ValueError(f"unknown effect {effect!r}")
    return [LevelConfig(index=i + 1, variance=v, weight=w, enabled=en)
            for i, (v, w, en) in enumerate(DEFAULT_LEVELS[key])]


@dataclass
class PyramidLevel:
    config: LevelConfig
    alpha: np.ndarray    # (h, w) in [0, 1]
    stencil: np.ndarray  # (h, w) bool, exactly alpha > 0


@dataclass
class MaskPyramid:
    levels: list[PyramidLevel]  # enabled levels only, ordered fine -> coarse
    width: int                  # full-resolution size
    height: int

    def level(self, index: int) -> PyramidLevel:
        for lvl in self.levels:
            if lvl.config.index == index:
                return lvl
        raise KeyError(f"level {index} not present in pyramid")


def downsample_max(mask: np.ndarray, divisor: int) -> np.ndarray:
    """Block max-pool with ceil-sized edge blocks at the right/bottom borders."""
    if divisor not in (1, 2, 4, 8):
        raise ValueError("divisor must be one of 1, 2, 4, 8")
    h, w = mask.shape
    if h < divisor or w < divisor:
        raise ValueError(f"mask {w}x{h} smaller than divisor {divisor}")
    if divisor == 1:
        return mask.copy()
    th = -(-h // divisor)
    tw = -(-w // divisor)
    padded = np.full((th * divisor, tw * divisor), -np.inf)
    padded[:h, :w] = mask
    return padded.reshape(th, divisor, tw, divisor).max(axis=(1, 3))


def _convolve_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0)] * img.ndim
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="edge")
    out = np.zeros_like(img, dtype=np.float64)
    n = img.shape[axis]
    for k, wk in enumerate(kernel):
        sl = [slice(None)] * img.ndim
        sl[axis] = slice(k, k + n)
        out += wk * padded[tuple(sl)]
    return out


def gaussian_kernel_1d(variance: float) -> np.ndarray:
    """Normalized 1-D Gaussian, truncated at radius ceil(3 sigma)."""
    sigma = math.sqrt(variance)
    r = math.ceil(3.0 * sigma)
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * variance))
    return k / k.sum()


def gaussian_blur(img: np.ndarray, variance: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders; variance 0 is the identity."""
    if variance < 0:
        raise ValueError("variance must be >= 0")
    if variance == 0:
        return img
    k = gaussian_kernel_1d(variance)
    out = _convolve_axis(img, k, axis=0)
    out = _convolve_axis(out, k, axis=1)
    return np.clip(out, 0.0, 1.0)


def _validate_configs(configs: list[LevelConfig]):
    idx = sorted(c.index for c in configs)
    if idx != [1, 2, 3, 4]:
        raise ValueError("level configs must cover indices 1..4 exactly once")
    coarsest = next(c for c in configs if c.index == COARSEST_LEVEL)
    if not coarsest.enabled:
        raise ValueError("the coarsest level must stay enabled; it covers the whole frame")
    if coarsest.weight != 1.0 or coarsest.variance != 0.0:
        raise ValueError("the coarsest level requires weight 1 and variance 0")


def build_pyramid(edge: EdgeImage, configs: list[LevelConfig], alpha_cutoff: float = 1e-6) -> MaskPyramid:
    """Downsample + blur the edge mask per level, then enforce inclusiveness.

    Blur tails below `alpha_cutoff` are zeroed so the > 0 stencil threshold is
    not inflated by float residue. Inclusiveness is enforced structurally by
    raising each coarser alpha to at least the block max of the next finer
    enabled level, cascading fine to coarse.
    """
    _validate_configs(configs)
    h, w = edge.mask.shape
    enabled = sorted((c for c in configs if c.enabled), key=lambda c: c.index)

    alphas = []
    for c in enabled:
        if c.index == COARSEST_LEVEL:
            th = -(-h // c.divisor)
            tw = -(-w // c.divisor)
            alphas.append(np.ones((th, tw)))
        else:
            a = gaussian_blur(downsample_max(edge.mask, c.divisor), c.variance)
            a[a < alpha_cutoff] = 0.0
            alphas.append(a)

    for i in range(len(enabled) - 1):
        ratio = enabled[i + 1].divisor // enabled[i].divisor
        lifted = downsample_max(alphas[i], ratio)
        alphas[i + 1] = np.maximum(alphas[i + 1], lifted)

    levels = [PyramidLevel(config=c, alpha=a, stencil=a > 0.0) for c, a in zip(enabled, alphas)]
    return MaskPyramid(levels=levels, width=w, height=h)


def pyramid_debug_rgb(pyr: MaskPyramid) -> np.ndarray:
    """Full-resolution region visualization: each pixel takes the color of the
    finest level whose stencil covers it (red, green, blue; gray = coarsest only)."""
    colors = {1: (1.0, 0.1, 0.1), 2: (0.1, 1.0, 0.1), 3: (0.2, 0.3, 1.0), 4: (0.25, 0.25, 0.25)}
    rgb = np.zeros((pyr.height, pyr.width, 3))
    for lvl in reversed(pyr.levels):  # coarse first so fine levels overwrite
        up = upscale_nearest(lvl.stencil, lvl.config.divisor, pyr.width, pyr.height)
        rgb[up] = colors[lvl.config.index]
    return rgb
