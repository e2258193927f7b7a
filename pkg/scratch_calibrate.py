"""Full surrogate-subset calibration (not part of the package)."""
import json
import sys
import time

import numpy as np
from skimage import data

import mister
from mister.config import default_config
from mister.image import bicubic_interpolate, crop, downsample, psnr
from mister.synthetic import spoke_wheel


def subset():
    return {
        "camera": data.camera().astype(float),
        "coins": data.coins().astype(float),
        "text": data.text().astype(float),
        "moon": data.moon().astype(float),
        "page": data.page().astype(float),
        "wheel": spoke_wheel(256),
    }


def main(factor):
    results = {}
    for name, gt in subset().items():
        h, w = gt.shape
        h -= h % factor
        w -= w % factor
        gt = gt[:h, :w]
        lr = downsample(gt, factor)
        bic = crop(bicubic_interpolate(lr, factor), 0, 0, w, h)
        entry = {"bicubic": psnr(bic, gt)}
        for mode in ("mister", "ec1", "ec2", "ec3", "ec4"):
            cfg = default_config(factor)
            cfg.guide_mode = mode
            t0 = time.time()
            out, st = mister.interpolate(lr, cfg, return_stages=True)
            out = crop(out, 0, 0, w, h)
            entry[mode] = psnr(out, gt)
            if mode == "mister":
                entry["stages"] = {
                    k: psnr(crop(v, 0, 0, w, h), gt) for k, v in st.items()
                }
                entry["seconds"] = time.time() - t0
        results[name] = entry
        print(name, json.dumps(entry, default=float), flush=True)
    with open(f"/tmp/calib_x{factor}.json", "w") as fh:
        json.dump(results, fh, indent=1, default=float)
    avg = {}
    for key in ("bicubic", "mister", "ec1", "ec2", "ec3", "ec4"):
        avg[key] = float(np.mean([r[key] for r in results.values()]))
    print("AVERAGES", json.dumps(avg), flush=True)


if __name__ == "__main__":
    main(int(sys.argv[1]))
