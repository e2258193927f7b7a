"""Stage-level sweeps with frozen prefix (not part of the package)."""
import os
import pickle
import sys
import time
from dataclasses import replace

import numpy as np
from skimage import data

from mister.config import default_config
from mister.image import (bicubic_interpolate, crop, downsample, psnr, reflect_pad)
from mister.aliasing import remove_aliasing, build_guide
from mister.stages import stage1, stage2, stage3, stage4
from mister.synthetic import spoke_wheel

CACHE = "/tmp/tune2_cache.pkl"


def images():
    cam = data.camera().astype(float)
    return {"camcrop": cam[96:352, 192:448], "wheel": spoke_wheel(256)}


def prefix(name, gt, cfg, upto="guide"):
    key = (name, upto)
    cache = {}
    if os.path.exists(CACHE):
        with open(CACHE, "rb") as fh:
            cache = pickle.load(fh)
    if key in cache:
        return cache[key]
    lr = downsample(gt, 2)
    frame = reflect_pad(lr, cfg.pad)
    ar = remove_aliasing(frame, cfg.svar, 2)

    def runner(l, g):
        return stage1(l, g, replace(cfg.stage1, iterations=cfg.guide.stage1_iterations), 2)

    guide = build_guide(frame, cfg.svar, cfg.guide, 2, runner, aliasing_removed=ar)
    value = (lr, frame, ar, guide)
    if upto == "s2":
        s1 = stage1(frame, guide, cfg.stage1, 2)
        s2 = stage2(s1, cfg.stage2, 2)
        value = value + (s1, s2)
    cache[key] = value
    with open(CACHE, "wb") as fh:
        pickle.dump(cache, fh)
    return value


def q(x, gt, pad):
    h, w = gt.shape
    return psnr(crop(x, 2 * pad, 2 * pad, w, h), gt)


def sweep_stage1():
    cfg = default_config(2)
    for name, gt in images().items():
        lr, frame, ar, guide = prefix(name, gt, cfg)
        print(f"== {name} guide={q(guide, gt, cfg.pad):.2f}", flush=True)
        for lam in (0.3, 0.15, 0.05, 0.01):
            s1a = stage1(frame, guide, replace(cfg.stage1, iterations=1, lambda_a=lam), 2)
            print(f"  s1a lam={lam}: {q(s1a, gt, cfg.pad):.2f}", flush=True)
        for k in (6, 10, 16):
            s1a = stage1(frame, guide, replace(cfg.stage1, iterations=1, k=k), 2)
            print(f"  s1a k={k}: {q(s1a, gt, cfg.pad):.2f}", flush=True)
        for cw in (3.0, 10.0, 30.0):
            s1a = stage1(frame, guide, replace(cfg.stage1, iterations=1, c_w=cw), 2)
            print(f"  s1a c_w={cw}: {q(s1a, gt, cfg.pad):.2f}", flush=True)
        for na in (12, 16, 20):
            s1a = stage1(frame, guide, replace(cfg.stage1, iterations=1, n_a=na), 2)
            print(f"  s1a n_a={na}: {q(s1a, gt, cfg.pad):.2f}", flush=True)


def sweep_stage1_full():
    cfg = default_config(2)
    for name, gt in images().items():
        lr, frame, ar, guide = prefix(name, gt, cfg)
        print(f"== {name}", flush=True)
        for iters in (2, 3, 4):
            for nb, wb, lb in ((8, 21, 0.10), (8, 21, 0.05), (12, 21, 0.10)):
                c = replace(cfg.stage1, iterations=iters, n_b=nb, w_b=wb, lambda_b=lb)
                s1 = stage1(frame, guide, c, 2)
                print(f"  s1 it={iters} n_b={nb} lam_b={lb}: {q(s1, gt, cfg.pad):.2f}",
                      flush=True)


def sweep_stage34():
    cfg = default_config(2)
    for name, gt in images().items():
        lr, frame, ar, guide, s1, s2 = prefix(name, gt, cfg, upto="s2")
        print(f"== {name} s1={q(s1, gt, cfg.pad):.2f} s2={q(s2, gt, cfg.pad):.2f}",
              flush=True)
        for lam, it in ((0.05, (2, 2)), (0.01, (2, 2)), (0.01, (1, 1)), (0.003, (1, 1))):
            c3 = replace(cfg.stage3, lambda_a=lam, lambda_b=lam / 2,
                         iters_a=it[0], iters_b=it[1])
            out3 = stage3(s2, c3, 2)
            q3 = q(out3, gt, cfg.pad)
            out4 = stage4(out3, frame, cfg.stage4, 2)
            print(f"  s3 lam={lam} it={it}: s3={q3:.2f} s4={q(out4, gt, cfg.pad):.2f}",
                  flush=True)


def sweep_stage4():
    cfg = default_config(2)
    for name, gt in images().items():
        lr, frame, ar, guide, s1, s2 = prefix(name, gt, cfg, upto="s2")
        c3 = replace(cfg.stage3, lambda_a=0.01, lambda_b=0.005, iters_a=1, iters_b=1)
        s3 = stage3(s2, c3, 2)
        print(f"== {name} s3={q(s3, gt, cfg.pad):.2f}", flush=True)
        for alpha in ((1.2, 0.6), (2.4, 1.2), (0.6, 0.3)):
            for th in ((20, 10), (5, 2)):
                c4 = replace(cfg.stage4, alpha_a=alpha[0], alpha_b=alpha[1],
                             th_a=th[0], th_b=th[1])
                out4 = stage4(s3, frame, c4, 2)
                print(f"  alpha={alpha} th={th}: s4={q(out4, gt, cfg.pad):.2f}", flush=True)


if __name__ == "__main__":
    {"s1": sweep_stage1, "s1full": sweep_stage1_full,
     "s34": sweep_stage34, "s4": sweep_stage4}[sys.argv[1]]()
