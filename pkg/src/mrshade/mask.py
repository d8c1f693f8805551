"""Full-resolution edge image from G-buffer and shadow discontinuities.

Three binary sources feed the mask: normal edges (forward-difference dot
products), depth edges (1-2-1 second difference of linear view depth per
axis), and hard-shadow edges (forward difference of a one-sample shadow
test). Any adjacency between covered and uncovered pixels is always an edge.
The combined mask is the per-pixel max of the enabled sources and stays
binary until the pyramid stage blurs it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import GBuffer, ShadowMap, shadow_test_hard


@dataclass
class EdgeParams:
    normal_threshold: float = 0.05
    depth_threshold: float | None = None  # None: 0.02 x valid depth range (plus a tiny absolute floor)
    use_normal: bool = True
    use_depth: bool = True
    use_shadow: bool = False

    def __post_init__(self):
        if not (self.use_normal or self.use_depth or self.use_shadow):
            raise ValueError("at least one edge source must be enabled")
        if self.normal_threshold < 0:
            raise ValueError("normal_threshold must be >= 0")
        if self.depth_threshold is not None and self.depth_threshold < 0:
            raise ValueError("depth_threshold must be >= 0")


@dataclass
class EdgeImage:
    mask: np.ndarray          # (H, W) float in [0, 1]; binary before blurring
    normal: np.ndarray | None = None  # per-source debug channels, (H, W) bool
    depth: np.ndarray | None = None
    shadow: np.ndarray | None = None


def _coverage_edges(valid: np.ndarray) -> np.ndarray:
    """Pixels whose right or down neighbor differs in coverage."""
    edge = np.zeros_like(valid, dtype=bool)
    edge[:, :-1] |= valid[:, :-1] != valid[:, 1:]
    edge[:-1, :] |= valid[:-1, :] != valid[1:, :]
    return edge


def normal_edges(g: GBuffer, threshold: float) -> np.ndarray:
    """First-derivative normal test: edge where 1 - n1.n2 exceeds the threshold."""
    n = g.normal
    val = g.valid
    edge = np.zeros(val.shape, dtype=bool)
    dx = 1.0 - np.sum(n[:, :-1] * n[:, 1:], axis=-1)
    edge[:, :-1] |= (val[:, :-1] & val[:, 1:]) & (dx > threshold)
    dy = 1.0 - np.sum(n[:-1, :] * n[1:, :], axis=-1)
    edge[:-1, :] |= (val[:-1, :] & val[1:, :]) & (dy > threshold)
    return edge | _coverage_edges(val)


def resolve_depth_threshold(g: GBuffer, threshold: float | None) -> float:
    if threshold is not None:
        return threshold
    if g.valid.any():
        d = g.depth[g.valid]
        rng = float(d.max() - d.min())
        return 0.02 * rng + 1e-6 * float(d.max())  # floor keeps constant-depth planes edge-free
    return 1e-6


def depth_edges(g: GBuffer, threshold: float) -> np.ndarray:
    """Second-derivative depth test with the 1-2-1 stencil along each axis.

    One-sided at image borders (the truncated direction contributes no edge);
    linear depth ramps stay below the threshold by construction.
    """
    d = g.depth
    val = g.valid
    edge = np.zeros(val.shape, dtype=bool)
    lap_x = d[:, :-2] - 2.0 * d[:, 1:-1] + d[:, 2:]
    all_x = val[:, :-2] & val[:, 1:-1] & val[:, 2:]
    edge[:, 1:-1] |= all_x & (np.abs(lap_x) > threshold)
    lap_y = d[:-2, :] - 2.0 * d[1:-1, :] + d[2:, :]
    all_y = val[:-2, :] & val[1:-1, :] & val[2:, :]
    edge[1:-1, :] |= all_y & (np.abs(lap_y) > threshold)
    return edge | _coverage_edges(val)


def shadow_edges(g: GBuffer, sm: ShadowMap, bias: float) -> np.ndarray:
    """Edges of the one-sample hard shadow state (forward differences).

    Uncovered pixels have no shadow state and count as lit.
    """
    world = g.world_positions()
    lit = shadow_test_hard(sm, world.reshape(-1, 3), bias).reshape(g.depth.shape)
    lit = np.where(g.valid, lit, True)
    edge = np.zeros(lit.shape, dtype=bool)
    edge[:, :-1] |= lit[:, :-1] != lit[:, 1:]
    edge[:-1, :] |= lit[:-1, :] != lit[1:, :]
    return edge


def build_edge_image(g: GBuffer, sm: ShadowMap | None, params: EdgeParams,
                     shadow_bias: float = 0.0) -> EdgeImage:
    """Combine the enabled binary edge sources into one full-resolution mask."""
    if params.use_shadow and sm is None:
        raise ValueError("shadow edge source enabled but no shadow map provided")
    n_ch = normal_edges(g, params.normal_threshold) if params.use_normal else None
    d_ch = depth_edges(g, resolve_depth_threshold(g, params.depth_threshold)) if params.use_depth else None
    s_ch = shadow_edges(g, sm, shadow_bias) if params.use_shadow else None
    mask = np.zeros(g.depth.shape)
    for ch in (n_ch, d_ch, s_ch):
        if ch is not None:
            mask = np.maximum(mask, ch.astype(np.float64))
    return EdgeImage(mask=mask, normal=n_ch, depth=d_ch, shadow=s_ch)


def edge_debug_rgb(edges: EdgeImage) -> np.ndarray:
    """Color-coded source visualization: red=normal, green=depth, blue=shadow."""
    h, w = edges.mask.shape
    rgb = np.zeros((h, w, 3))
    for i, ch in enumerate((edges.normal, edges.depth, edges.shadow)):
        if ch is not None:
            rgb[..., i] = ch.astype(np.float64)
    return rgb
