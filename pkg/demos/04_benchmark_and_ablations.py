"""Benchmark harness and guide-mode ablations on a small image set.

Builds a directory of ground-truth images, then reports the bicubic and
pipeline PSNR per image (the CSV the command-line benchmark writes has the
same rows), plus the final PSNR of every guide-construction variant on one
aliased image.

Run from the repository root:  python3 demos/04_benchmark_and_ablations.py
"""

import os
import tempfile

import numpy as np

from mister import benchmark, interpolate, psnr, save_image
from mister.config import default_config
from mister.image import crop, downsample
from mister.synthetic import spoke_wheel

rng = np.random.default_rng(7)
wheel = spoke_wheel(128, spokes=20)
card = 120 + 80 * np.sin(np.arange(128)[:, None] / 3.0) * np.cos(np.arange(128)[None, :] / 7.0)

with tempfile.TemporaryDirectory() as gt_dir:
    save_image(wheel, os.path.join(gt_dir, "wheel.pgm"))
    save_image(card, os.path.join(gt_dir, "card.pgm"))
    rows = benchmark(gt_dir, 2, default_config(2))
    print(f"{'image':>10}  {'bicubic':>8}  {'pipeline':>8}")
    for name, bic, out in rows:
        print(f"{name:>10}  {bic:8.2f}  {out:8.2f}")

print("\nguide-mode ablations on the wheel (final x2 PSNR):")
lr = downsample(wheel, 2)
for mode in ("mister", "ec4", "ec3", "ec2", "ec1"):
    cfg = default_config(2)
    cfg.guide_mode = mode
    out = crop(interpolate(lr, cfg), 0, 0, 128, 128)
    print(f"  {mode:>6}: {psnr(out, wheel):6.2f} dB")
