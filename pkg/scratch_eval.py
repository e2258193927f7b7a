"""Scratch evaluation on wheel synthetic + full camera (not part of the package)."""
import sys
import time

import numpy as np
from skimage import data

import mister
from mister.config import default_config
from mister.image import bicubic_interpolate, crop, downsample, psnr


def wheel(size=256, spokes=36, supersample=8):
    """Anti-aliased radial spoke pattern (high angular frequency near center)."""
    n = size * supersample
    ax = (np.arange(n) + 0.5) / supersample - size / 2
    x, y = np.meshgrid(ax, ax)
    theta = np.arctan2(y, x)
    pattern = 127.5 + 127.5 * np.sign(np.sin(spokes * theta))
    r = np.sqrt(x * x + y * y)
    pattern[r < 6] = 127.5
    pattern[r > size * 0.48] = 127.5
    blocks = pattern.reshape(size, supersample, size, supersample)
    return blocks.mean(axis=(1, 3))


def evaluate(name, gt, factor):
    cfg = default_config(factor)
    lr = downsample(gt, factor)
    h, w = gt.shape
    bic = crop(bicubic_interpolate(lr, factor), 0, 0, w, h)
    t0 = time.time()
    out, st = mister.interpolate(lr, cfg, return_stages=True)
    out = crop(out, 0, 0, w, h)
    line = " ".join(
        f"{k}={psnr(crop(st[k],0,0,w,h), gt):.2f}"
        for k in ("ar", "guide", "s1a", "s1", "s2", "s3", "s4") if k in st
    )
    print(f"{name} x{factor}: bicubic={psnr(bic, gt):.2f} mister={psnr(out, gt):.2f} "
          f"({time.time()-t0:.0f}s)\n   {line}", flush=True)


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "wheel"
    if which == "wheel":
        evaluate("wheel", wheel(256), 2)
    elif which == "camera":
        evaluate("camera", data.camera().astype(float), 2)
    elif which == "camera3":
        evaluate("camera", data.camera().astype(float), 3)
    elif which == "wheel3":
        evaluate("wheel", wheel(255), 3)
