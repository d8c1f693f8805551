import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrshade.core import upsample
from mrshade.mask import EdgeImage
from mrshade.pipeline import (PipelineConfig, SsaoBlur, bilateral_blur_masked, blend,
                              prepare_inputs, render_level, run_multires, run_reference,
                              upsample_layer_masked)
from mrshade.pyramid import LevelConfig, MaskPyramid, PyramidLevel


def _pyramid_from_alphas(alpha_by_index, width, height):
    levels = []
    for idx in sorted(alpha_by_index):
        a, wgt = alpha_by_index[idx]
        a = np.asarray(a, dtype=np.float64)
        cfg = LevelConfig(index=idx, variance=0.0 if idx == 4 else 0.924, weight=wgt)
        levels.append(PyramidLevel(config=cfg, alpha=a, stencil=a > 0))
    return MaskPyramid(levels=levels, width=width, height=height)


# ---------------------------------------------------------------------------
# render_level

def test_render_level_counts(quad_scene, crease_scene):
    cfg = PipelineConfig.for_effect("ssao")
    inputs = prepare_inputs(cfg, quad_scene, 64, 64)
    res = run_multires(cfg, quad_scene, 64, 64, inputs=inputs)
    # edge-free scene: fine levels shade nothing, the coarsest shades every pixel
    lvl1 = render_level(cfg, cfg.levels[0], res.pyramid, inputs)
    assert lvl1.samples_evaluated == 0
    lvl4 = render_level(cfg, cfg.levels[3], res.pyramid, inputs)
    assert lvl4.shaded_pixels == 8 * 8
    assert lvl4.samples_evaluated == 64 * 8 * 8

    disabled = LevelConfig(index=2, variance=1.0, weight=1.0, enabled=False)
    with pytest.raises(ValueError):
        render_level(cfg, disabled, res.pyramid, inputs)

    # crease scene level 2: samples = N x stencil popcount
    cfg2 = PipelineConfig.for_effect("ssao")
    inputs2 = prepare_inputs(cfg2, crease_scene, 64, 64)
    res2 = run_multires(cfg2, crease_scene, 64, 64, inputs=inputs2)
    lvl2 = res2.pyramid.level(2)
    out2 = render_level(cfg2, cfg2.levels[1], res2.pyramid, inputs2)
    assert out2.shaded_pixels == int(lvl2.stencil.sum())
    assert out2.samples_evaluated == 64 * int(lvl2.stencil.sum())


# ---------------------------------------------------------------------------
# bilateral blur

def test_bilateral_full_stencil_constant_unchanged():
    layer = np.full((9, 9, 3), 0.7)
    out = bilateral_blur_masked(layer, np.ones((9, 9), bool), 1.0)
    assert np.allclose(out, 0.7, atol=1e-12)


def test_bilateral_single_pixel_self_normalizes():
    layer = np.zeros((9, 9, 3))
    st = np.zeros((9, 9), bool)
    st[4, 4] = True
    layer[4, 4] = (0.3, 0.6, 0.9)
    out = bilateral_blur_masked(layer, st, 1.0)
    # (w*x)/w self-normalization: identity up to one rounding step
    assert np.allclose(out[4, 4], layer[4, 4], rtol=0, atol=1e-15)
    assert not out[~st].any()


def test_bilateral_half_plane_no_bleed_exact():
    h = w = 16
    st = np.zeros((h, w), bool)
    st[:, :8] = True
    layer = np.zeros((h, w, 3))
    layer[st] = 1.0
    out = bilateral_blur_masked(layer, st, 1.0)
    # defined pixels stay exactly 1: the zero-filled undefined side has weight 0
    assert np.all(out[st] == 1.0)
    assert np.all(out[~st] == 0.0)


def test_bilateral_zero_variance_identity_and_validation():
    layer = np.random.default_rng(0).random((4, 4, 3))
    assert bilateral_blur_masked(layer, np.ones((4, 4), bool), 0.0) is layer
    with pytest.raises(ValueError):
        bilateral_blur_masked(layer, np.ones((4, 4), bool), -1.0)


# ---------------------------------------------------------------------------
# blend

def test_blend_zero_alpha_keeps_coarsest():
    rng = np.random.default_rng(1)
    c4 = rng.random((2, 2, 3))
    pyr = _pyramid_from_alphas({1: (np.zeros((16, 16)), 100.0),
                                4: (np.ones((2, 2)), 1.0)}, 16, 16)
    out = blend(pyr, {1: np.zeros((16, 16, 3)), 4: c4})
    assert np.array_equal(out, upsample(c4, 16, 16))


def test_blend_saturated_alpha_selects_finer_exactly():
    rng = np.random.default_rng(2)
    c1 = rng.random((16, 16, 3))
    c4 = rng.random((2, 2, 3))
    a1 = np.zeros((16, 16))
    a1[3:7, 4:9] = 0.5  # x weight 100 -> saturates
    pyr = _pyramid_from_alphas({1: (a1, 100.0), 4: (np.ones((2, 2)), 1.0)}, 16, 16)
    c1_masked = np.where((a1 > 0)[..., None], c1, 0.0)
    out = blend(pyr, {1: c1_masked, 4: c4})
    sat = a1 * 100.0 >= 1.0
    assert np.array_equal(out[sat], c1_masked[sat])


def test_blend_half_alpha_midpoint():
    # alpha x weight = 0.5 with c_i = 1 over a zero composite -> exactly 0.5
    a1 = np.full((8, 8), 0.0005)
    pyr = _pyramid_from_alphas({1: (a1, 1000.0), 4: (np.ones((1, 1)), 1.0)}, 8, 8)
    out = blend(pyr, {1: np.ones((8, 8, 3)), 4: np.zeros((1, 1, 3))})
    assert np.allclose(out, 0.5, atol=1e-12)


def test_blend_missing_layer_is_an_error():
    pyr = _pyramid_from_alphas({1: (np.zeros((8, 8)), 1.0), 4: (np.ones((1, 1)), 1.0)}, 8, 8)
    with pytest.raises(ValueError):
        blend(pyr, {4: np.zeros((1, 1, 3))})


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_blend_is_convex_combination(seed):
    rng = np.random.default_rng(seed)
    h = w = 16
    alphas = {}
    layers = {}
    for idx, size in ((1, 16), (2, 8), (3, 4), (4, 2)):
        a = np.clip(rng.random((size, size)) * 1.5 - 0.25, 0.0, 1.0)
        if idx == 4:
            a = np.ones((size, size))
        alphas[idx] = (a, float(rng.uniform(0.5, 1000.0)) if idx < 4 else 1.0)
        layer = rng.random((size, size, 3))
        layer[~(a > 0)] = 0.0
        layers[idx] = layer
    pyr = _pyramid_from_alphas(alphas, w, h)
    out = blend(pyr, layers)
    ups = [upsample_layer_masked(layers[i], pyr.level(i).stencil, w, h) for i in (1, 2, 3, 4)]
    stack = np.stack(ups)
    assert np.all(out >= stack.min(axis=0) - 1e-9)
    assert np.all(out <= stack.max(axis=0) + 1e-9)


def test_upsample_layer_masked_ignores_unshaded_texels():
    layer = np.zeros((4, 4, 3))
    st = np.zeros((4, 4), bool)
    st[:, :2] = True
    layer[st] = 0.8
    out = upsample_layer_masked(layer, st, 8, 8)
    # inside the stencil's interior the value must not be dragged toward zero
    assert np.allclose(out[:, :3], 0.8, atol=1e-12)
    # pixels with no shaded texel in their footprint stay zero
    assert np.all(out[:, 6:] == 0.0)


# ---------------------------------------------------------------------------
# run_multires / run_reference

def test_edge_free_plane_work_arithmetic(quad_scene):
    cfg = PipelineConfig.for_effect("ssao")
    res = run_multires(cfg, quad_scene, 64, 64)
    per_level = {l.index: l.samples for l in res.work.levels}
    assert per_level == {1: 0, 2: 0, 3: 0, 4: 64 * 8 * 8}
    assert res.work.total_samples == 64 * 64
    assert res.work.reference_samples == 64 * 64 * 64
    assert res.work.work_ratio == 1.0 / 64.0


def test_resolution_must_be_divisible_by_8(quad_scene):
    cfg = PipelineConfig.for_effect("ssao")
    with pytest.raises(ValueError):
        run_multires(cfg, quad_scene, 100, 100)
    with pytest.raises(ValueError):
        run_reference(cfg, quad_scene, 60, 64)


@pytest.mark.parametrize("effect", ["ssao", "ssm", "ssgi"])
def test_forced_full_resolution_equals_reference(crease_scene, effect):
    cfg = PipelineConfig.for_effect(effect, ssao_blur=SsaoBlur(enabled=False))
    cfg.params.samples = 16
    inputs = prepare_inputs(cfg, crease_scene, 64, 64)
    multi = run_multires(cfg, crease_scene, 64, 64, inputs=inputs,
                         edge_mask_override=np.ones((64, 64)))
    ref = run_reference(cfg, crease_scene, 64, 64, inputs=inputs)
    assert np.max(np.abs(multi.image - ref.image)) <= 1e-6


def test_zero_edge_collapse_equals_coarsest_upsample(crease_scene):
    cfg = PipelineConfig.for_effect("ssao", ssao_blur=SsaoBlur(enabled=False))
    cfg.params.samples = 16
    inputs = prepare_inputs(cfg, crease_scene, 64, 64)
    multi = run_multires(cfg, crease_scene, 64, 64, inputs=inputs,
                         edge_mask_override=np.zeros((64, 64)))
    coarse = multi.level_outputs[4].layer
    assert np.array_equal(multi.image, upsample(coarse, 64, 64))
    assert {l.index: l.samples for l in multi.work.levels}[1] == 0


def test_saturation_invariant_with_blur_disabled(crease_scene):
    cfg = PipelineConfig.for_effect("ssao", ssao_blur=SsaoBlur(enabled=False))
    cfg.params.samples = 16
    inputs = prepare_inputs(cfg, crease_scene, 64, 64)
    multi = run_multires(cfg, crease_scene, 64, 64, inputs=inputs)
    ref = run_reference(cfg, crease_scene, 64, 64, inputs=inputs)
    lvl1 = multi.pyramid.level(1)
    sat = np.minimum(lvl1.alpha * lvl1.config.weight, 1.0) >= 1.0
    assert sat.any()
    assert np.array_equal(multi.image[sat], ref.image[sat])


def test_work_dominance_bound(crease_scene, occluder_scene):
    bound = 1 + 1 / 4 + 1 / 16 + 1 / 64
    for scene in (crease_scene, occluder_scene):
        for effect in ("ssao", "ssm", "ssgi"):
            cfg = PipelineConfig.for_effect(effect)
            cfg.params.samples = 8
            res = run_multires(cfg, scene, 64, 64)
            assert res.work.total_samples <= bound * res.work.reference_samples


def test_disabling_an_empty_level_changes_nothing(quad_scene):
    cfg = PipelineConfig.for_effect("ssao")
    cfg.params.samples = 16
    base = run_multires(cfg, quad_scene, 64, 64)
    cfg2 = PipelineConfig.for_effect("ssao")
    cfg2.params.samples = 16
    cfg2.levels[1].enabled = False  # level 2's stencil is empty on this scene
    dropped = run_multires(cfg2, quad_scene, 64, 64)
    assert np.array_equal(base.image, dropped.image)
    assert base.work.total_samples == dropped.work.total_samples


def test_reference_work_is_full_domain(quad_scene):
    cfg = PipelineConfig.for_effect("ssao")
    ref = run_reference(cfg, quad_scene, 64, 64)
    assert ref.work.total_samples == 64 * 64 * 64
    assert ref.work.reference_samples == ref.work.total_samples
    assert ref.work.work_ratio == 1.0

    # the reference image does not depend on the level configs
    cfg2 = PipelineConfig.for_effect("ssao")
    cfg2.levels[0].weight = 999.0
    cfg2.levels[2].enabled = False
    ref2 = run_reference(cfg2, quad_scene, 64, 64)
    assert np.array_equal(ref.image, ref2.image)


def test_multires_result_carries_debug_artifacts(crease_scene):
    cfg = PipelineConfig.for_effect("ssao")
    cfg.params.samples = 8
    res = run_multires(cfg, crease_scene, 64, 64)
    assert isinstance(res.edges, EdgeImage)
    assert res.pyramid.width == 64 and res.pyramid.height == 64
    assert set(res.level_outputs) == {1, 2, 3, 4}
    assert "levels" in res.timings_ms and "total" in res.timings_ms


def test_threaded_levels_match_sequential(crease_scene, monkeypatch):
    cfg = PipelineConfig.for_effect("ssao")
    cfg.params.samples = 8
    seq = run_multires(cfg, crease_scene, 64, 64)
    monkeypatch.setenv("MRSHADE_THREADS", "4")
    par = run_multires(cfg, crease_scene, 64, 64)
    assert np.array_equal(seq.image, par.image)
    assert seq.work.total_samples == par.work.total_samples


def test_for_effect_defaults():
    ssao = PipelineConfig.for_effect("ssao")
    assert ssao.params.samples == 64 and not ssao.edges.use_shadow
    ssm = PipelineConfig.for_effect("ssm")
    assert ssm.params.samples == 196 and ssm.edges.use_shadow
    ssgi = PipelineConfig.for_effect("ssgi")
    assert ssgi.params.samples == 288
    assert [l.enabled for l in ssgi.levels] == [True, False, True, True]
    with pytest.raises(ValueError):
        PipelineConfig.for_effect("bloom")
    with pytest.raises(TypeError):
        PipelineConfig.for_effect("ssao", nonsense=1)
