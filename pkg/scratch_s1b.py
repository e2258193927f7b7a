"""Full-scale stage-1B sweep (not part of the package)."""
import os
import pickle
import sys
from dataclasses import replace

import numpy as np
from skimage import data

from mister.config import default_config
from mister.aliasing import remove_aliasing, build_guide
from mister.image import crop, downsample, psnr, reflect_pad
from mister.stages import stage1, stage2

CACHE = "/tmp/s1b_cache.pkl"


def main(factor):
    gt = data.camera().astype(float)
    cfg = default_config(factor)
    lr = downsample(gt, factor)
    frame = reflect_pad(lr, cfg.pad)
    s = factor

    if os.path.exists(CACHE + str(factor)):
        with open(CACHE + str(factor), "rb") as fh:
            guide = pickle.load(fh)
    else:
        ar = remove_aliasing(frame, cfg.svar, s)

        def runner(l, g):
            return stage1(l, g, replace(cfg.stage1, iterations=cfg.guide.stage1_iterations), s)

        guide = build_guide(frame, cfg.svar, cfg.guide, s, runner, aliasing_removed=ar)
        with open(CACHE + str(factor), "wb") as fh:
            pickle.dump(guide, fh)

    def q(x):
        return round(psnr(crop(x, s * cfg.pad, s * cfg.pad, gt.shape[1], gt.shape[0]), gt), 3)

    s1a = stage1(frame, guide, replace(cfg.stage1, iterations=1), s)
    print(f"guide={q(guide)} s1a={q(s1a)}", flush=True)
    nb_opts = (8, 12) if factor == 2 else (9, 12)
    for nb in nb_opts:
        for lam_b in (0.1, 0.05, 0.02):
            for it in (2, 3):
                c = replace(cfg.stage1, iterations=it, n_b=nb, lambda_b=lam_b)
                out = stage1(frame, guide, c, s)
                print(f"  n_b={nb} lam_b={lam_b} it={it}: s1={q(out)}", flush=True)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 2)
