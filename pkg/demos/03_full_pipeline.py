"""End-to-end x2 interpolation with stage-by-stage PSNR reporting.

Run from the repository root:  python3 demos/03_full_pipeline.py [image.pgm]
Without an argument a detailed natural test image from scikit-image is used
(cropped to keep the demo under a minute).
"""

import sys
import time

import numpy as np

from mister import interpolate, load_image, psnr
from mister.config import default_config
from mister.image import bicubic_interpolate, crop, downsample

if len(sys.argv) > 1:
    gt = load_image(sys.argv[1])
else:
    from skimage import data

    gt = data.camera().astype(float)[128:384, 96:352]

h, w = gt.shape
h -= h % 2
w -= w % 2
gt = gt[:h, :w]
lr = downsample(gt, 2)
print(f"ground truth {gt.shape}, interpolating its decimated version back up")

bic = crop(bicubic_interpolate(lr, 2), 0, 0, w, h)
print(f"bicubic:  {psnr(bic, gt):6.2f} dB")

cfg = default_config(2)
t0 = time.time()
out, snapshots = interpolate(lr, cfg, return_stages=True)
out = crop(out, 0, 0, w, h)
for key in ("ar", "guide", "s1a", "s1", "s2", "s3", "s4"):
    if key in snapshots:
        print(f"  {key:>5}: {psnr(crop(snapshots[key], 0, 0, w, h), gt):6.2f} dB")
print(f"pipeline: {psnr(out, gt):6.2f} dB  ({time.time() - t0:.0f}s)")
