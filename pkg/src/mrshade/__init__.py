"""mrshade: edge-aware multi-resolution rendering of screen-space lighting effects.

The renderer decomposes the frame into inclusive resolution levels seeded by
G-buffer/shadow discontinuities, shades each level only inside its stencil,
and recomposes the levels with weighted alpha blending. A naive
full-resolution pass serves as the quality and work baseline.
"""

from .core import sample_bilinear, sample_nearest, upsample
from .effects import (EffectKind, EffectOutput, EffectParams,
                      eval_ssao, eval_ssgi, eval_ssm)
from .mask import EdgeImage, EdgeParams, build_edge_image
from .metrics import QualityReport, WorkReport, rms_error, work_reduction
from .pipeline import (PipelineConfig, RenderInputs, SsaoBlur, bilateral_blur_masked,
                       blend, prepare_inputs, render_level, run_multires, run_reference)
from .pyramid import (LevelConfig, MaskPyramid, build_pyramid, default_levels,
                      downsample_max, gaussian_blur)
from .scene import (Camera, DirectionalLight, GBuffer, Scene, SceneError, ShadowMap,
                    load_scene, rasterize_gbuffer, rasterize_shadowmap, shadow_test_hard)

__version__ = "0.1.0"

__all__ = [
    "Camera", "DirectionalLight", "EdgeImage", "EdgeParams", "EffectKind",
    "EffectOutput", "EffectParams", "GBuffer", "LevelConfig", "MaskPyramid",
    "PipelineConfig", "QualityReport", "RenderInputs", "Scene", "SceneError",
    "ShadowMap", "SsaoBlur", "WorkReport", "bilateral_blur_masked", "blend",
    "build_edge_image", "build_pyramid", "default_levels", "downsample_max",
    "eval_ssao", "eval_ssgi", "eval_ssm", "gaussian_blur", "load_scene",
    "prepare_inputs", "rasterize_gbuffer", "rasterize_shadowmap", "render_level",
    "rms_error", "run_multires", "run_reference", "sample_bilinear",
    "sample_nearest", "shadow_test_hard", "upsample", "work_reduction",
]
