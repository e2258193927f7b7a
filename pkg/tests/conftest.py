import numpy as np
import pytest
from dataclasses import replace

from mister.config import default_config


def small_config(factor):
    """Desk-scale parameters for fast pipeline tests on tiny images."""
    cfg = default_config(factor)
    cfg.pad = 4
    cfg.svar = replace(cfg.svar, patch_side=4, group_size=3, window=7,
                       gaussian_side=3, gaussian_sigma=0.8, components=2,
                       iterations=1, stride=2)
    cfg.guide = replace(cfg.guide, blur_side=3, blur_sigma=0.6,
                        interp_rounds=1, stage1_iterations=1)
    if factor == 2:
        cfg.stage1 = replace(cfg.stage1, n_a=6, n_b=4, k=4, w_a=9, w_b=7, iterations=2)
        cfg.stage2 = replace(cfg.stage2, n=4, k=4, w=7, iterations=1)
        cfg.stage3 = replace(cfg.stage3, n_a=4, n_b=4, k=5, w_a=7, w_b=7,
                             iters_a=1, iters_b=1, stride=3)
        cfg.stage4 = replace(cfg.stage4, n_a=4, n_b=4, k=5, w=7,
                             iters_a=1, iters_b=1, stride=3)
    else:
        cfg.stage1 = replace(cfg.stage1, n_a=6, n_b=6, k=4, w_a=9, w_b=7, iterations=2)
        cfg.stage2 = replace(cfg.stage2, n=6, k=4, w=7, iterations=1)
        cfg.stage3 = replace(cfg.stage3, n_a=6, n_b=6, k=5, w_a=7, w_b=7,
                             iters_a=1, iters_b=1, stride=4)
    cfg.validate()
    return cfg


@pytest.fixture
def cfg_x2():
    return small_config(2)


@pytest.fixture
def cfg_x3():
    return small_config(3)


def random_u8(shape, seed):
    return np.random.default_rng(seed).integers(0, 256, size=shape).astype(np.float64)
