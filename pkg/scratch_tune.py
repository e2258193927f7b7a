"""Scratch tuning harness (not part of the package)."""
import os
import pickle
import sys
import time
from dataclasses import replace

import numpy as np
from skimage import data

from mister.config import default_config
from mister.image import (bicubic_interpolate, crop, downsample, gaussian_lowpass,
                          psnr, reflect_pad)
from mister.aliasing import remove_aliasing, build_guide
from mister.stages import stage1, stage2, stage3, stage4

CACHE = "/tmp/tune_cache.pkl"


def compute_until_s2(lr, cfg, key):
    cache = {}
    if os.path.exists(CACHE):
        with open(CACHE, "rb") as fh:
            cache = pickle.load(fh)
    if key in cache:
        return cache[key]
    s = cfg.factor
    frame = reflect_pad(lr, cfg.pad)
    ar = remove_aliasing(frame, cfg.svar, s)

    def runner(l, g):
        return stage1(l, g, replace(cfg.stage1, iterations=cfg.guide.stage1_iterations), s)

    guide = build_guide(frame, cfg.svar, cfg.guide, s, runner, aliasing_removed=ar)
    s1 = stage1(frame, guide, cfg.stage1, s)
    s2 = stage2(s1, cfg.stage2, s)
    cache[key] = (frame, ar, guide, s1, s2)
    with open(CACHE, "wb") as fh:
        pickle.dump(cache, fh)
    return cache[key]


def run(name):
    cam = data.camera().astype(float)
    gt = cam[128:384, 128:384]
    lr = downsample(gt, 2)
    cfg = default_config(2)
    frame, ar, guide, s1, s2 = compute_until_s2(lr, cfg, "camcrop_x2_default")
    s = 2
    pad = cfg.pad

    def q(x):
        return round(psnr(crop(x, s * pad, s * pad, 2 * lr.shape[1], 2 * lr.shape[0]), gt), 3)

    print("s1", q(s1), "s2", q(s2))

    if name == "stage3":
        for lam in (0.05, 0.02, 0.005, 0.001):
            for it in ((2, 2), (1, 1)):
                c3 = replace(cfg.stage3, lambda_a=lam, lambda_b=lam / 2,
                             iters_a=it[0], iters_b=it[1])
                t0 = time.time()
                out3 = stage3(s2, c3, s)
                out4 = stage4(out3, frame, cfg.stage4, s)
                print(f"lam={lam} iters={it} s3={q(out3)} s4={q(out4)} ({time.time()-t0:.1f}s)")
    elif name == "stage3b":
        for k in (6, 12, 20):
            for stride in (2, 3):
                c3 = replace(cfg.stage3, k=k, stride=stride)
                out3 = stage3(s2, c3, s)
                print(f"k={k} stride={stride} s3={q(out3)}")


if __name__ == "__main__":
    run(sys.argv[1] if len(sys.argv) > 1 else "stage3")
