"""mister: self-similarity driven single-image interpolation.

A numpy/scipy library for upscaling grayscale images by factors of 2 and 3.
Aliasing is first removed by projecting patches onto principal components of
union groups; the resulting guide image steers four progressive refinement
stages built on phase-aware patch regression, correlation matching, and
low-rank group shrinkage.  A benchmark harness reproduces the standard
decimate/interpolate/PSNR evaluation protocol.
"""

from .aliasing import build_guide, projection_pass, remove_aliasing, union_group
from .config import (
    GuideConfig,
    PipelineConfig,
    Stage1Config,
    Stage2Config,
    Stage3Config,
    Stage4Config,
    SvarConfig,
    default_config,
    format_config,
    load_config,
    parse_config,
)
from .image import (
    bicubic_interpolate,
    crop,
    downsample,
    gaussian_kernel,
    gaussian_lowpass,
    load_image,
    measured_mean,
    psnr,
    reflect_pad,
    save_image,
    upsample_zero_fill,
)
from .numerics import SvdResult, project_topk, ridge_solve, svd, wnnm_shrink
from .patches import (
    Patch,
    PatchGroup,
    SimilarityList,
    classify_phase,
    extract_patch,
    penalty_matrix,
    phase_mask,
    search_similar,
    similarity_cosine,
    similarity_exp_l1,
    synthesize_groups,
    synthesize_patches,
)
from .stages import benchmark, interpolate, stage1, stage2, stage3, stage4

__version__ = "0.1.0"
