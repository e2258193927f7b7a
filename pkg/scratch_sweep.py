"""Scratch parameter sweeps (not part of the package)."""
import itertools
import sys
import time
from dataclasses import replace

import numpy as np
from skimage import data

from mister.config import default_config
from mister.aliasing import remove_aliasing, build_guide
from mister.image import bicubic_interpolate, crop, downsample, psnr, reflect_pad
from mister.stages import stage1, stage2, stage3, stage4
from scratch_eval import wheel


def crops(factor):
    cam = data.camera().astype(float)
    return {
        "wheel": wheel(256),
        "camcrop": cam[96:352, 192:448],
    }


def sweep_svar():
    cfg = default_config(2)
    for name, gt in crops(2).items():
        lr = downsample(gt, 2)
        frame = reflect_pad(lr, cfg.pad)
        h, w = gt.shape
        base = psnr(crop(bicubic_interpolate(lr, 2), 0, 0, w, h), gt)
        print(f"== {name}: bicubic {base:.2f}", flush=True)
        for sigma, comp, kar, iters in itertools.product(
            (0.6, 0.8, 1.0), (2, 3, 4), (8,), (1, 2)
        ):
            sv = replace(cfg.svar, gaussian_sigma=sigma, components=comp,
                         group_size=kar, iterations=iters)
            ar = remove_aliasing(frame, sv, 2)
            q = psnr(crop(ar, 16, 16, w, h), gt)
            print(f"  sigma={sigma} k={comp} kar={kar} it={iters}: ar={q:.2f}", flush=True)


def sweep_guide():
    cfg = default_config(2)
    for name, gt in crops(2).items():
        lr = downsample(gt, 2)
        frame = reflect_pad(lr, cfg.pad)
        h, w = gt.shape
        print(f"== {name}", flush=True)
        for sigma, comp, bsig, rounds in itertools.product(
            (0.6, 0.8), (3, 4), (0.5, 0.7), (1, 2)
        ):
            sv = replace(cfg.svar, gaussian_sigma=sigma, components=comp)
            gc = replace(cfg.guide, blur_sigma=bsig, interp_rounds=rounds)
            def runner(l, g, _c=cfg.stage1, _gc=gc):
                return stage1(l, g, replace(_c, iterations=_gc.stage1_iterations), 2)
            t0 = time.time()
            ar = remove_aliasing(frame, sv, 2)
            gd = build_guide(frame, sv, gc, 2, runner, aliasing_removed=ar)
            s1a = stage1(frame, gd, replace(cfg.stage1, iterations=1), 2)
            qg = psnr(crop(gd, 16, 16, w, h), gt)
            q1 = psnr(crop(s1a, 16, 16, w, h), gt)
            print(f"  sig={sigma} k={comp} bsig={bsig} r={rounds}: "
                  f"guide={qg:.2f} s1a={q1:.2f} ({time.time()-t0:.0f}s)", flush=True)


if __name__ == "__main__":
    {"svar": sweep_svar, "guide": sweep_guide}[sys.argv[1]]()
