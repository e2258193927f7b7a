"""Command-line front end: interpolate, benchmark, downsample, psnr."""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import config as cfgmod
from . import image as im
from . import stages

_GUIDE_MODES = cfgmod.GUIDE_MODES


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mister",
        description="Self-similarity driven single-image interpolation (grayscale, x2/x3).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--factor", type=int, choices=(2, 3), default=None,
                       help="upscaling factor (default 2, or the config file's)")
        p.add_argument("--guide-mode", choices=_GUIDE_MODES, default=None,
                       help="guide construction variant (default mister)")
        p.add_argument("--config", default=None,
                       help="parameter file (key = value lines); default $MISTER_CONFIG")
        p.add_argument("--print-config", action="store_true",
                       help="echo the effective configuration before running")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint; accepted for interface compatibility, "
                            "the implementation is single-threaded and outputs "
                            "never depend on it")

    p_int = sub.add_parser("interpolate", help="upscale one image")
    p_int.add_argument("input", help="source image (.pgm or .png)")
    p_int.add_argument("output", help="destination image (.pgm or .png)")
    p_int.add_argument("--dump-stages", action="store_true",
                       help="write <output stem>.<stage>.pgm intermediates")
    p_int.add_argument("--reference", default=None,
                       help="ground-truth image; prints psnr_db=<value>")
    add_common(p_int)

    p_bench = sub.add_parser("benchmark", help="evaluate a directory of ground-truth images")
    p_bench.add_argument("gt_dir", help="directory of ground-truth .pgm/.png images")
    p_bench.add_argument("csv", help="output CSV path")
    add_common(p_bench)

    p_down = sub.add_parser("downsample", help="decimate onto the measurement grid")
    p_down.add_argument("input")
    p_down.add_argument("output")
    add_common(p_down)

    p_psnr = sub.add_parser("psnr", help="peak signal-to-noise ratio between two images")
    p_psnr.add_argument("image_a")
    p_psnr.add_argument("image_b")
    add_common(p_psnr)
    return parser


def _load_pipeline_config(args) -> cfgmod.PipelineConfig:
    path = args.config if args.config is not None else os.environ.get("MISTER_CONFIG")
    fallback = args.factor if args.factor is not None else 2
    if path:
        cfg = cfgmod.load_config(path, factor=fallback)
        if args.factor is not None and cfg.factor != args.factor:
            raise ValueError(
                f"config file sets factor {cfg.factor} but --factor {args.factor} was given"
            )
    else:
        cfg = cfgmod.default_config(fallback)
    if args.guide_mode is not None:
        cfg.guide_mode = args.guide_mode
    cfg.validate()
    return cfg


def _format_db(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.4f}"


def _cmd_interpolate(args) -> int:
    cfg = _load_pipeline_config(args)
    if args.print_config:
        sys.stdout.write(cfgmod.format_config(cfg))
    img = im.load_image(args.input)
    if args.dump_stages:
        out, snaps = stages.interpolate(img, cfg, return_stages=True)
        stem = os.path.splitext(args.output)[0]
        for key, snap in snaps.items():
            im.save_image(snap, f"{stem}.{key}.pgm", format="pgm")
    else:
        out = stages.interpolate(img, cfg)
    im.save_image(out, args.output)
    if args.reference is not None:
        import numpy as np

        ref = im.load_image(args.reference)
        written = im.quantize_u8(out).astype(np.float64)  # score the stored artifact
        h = min(ref.shape[0], written.shape[0])
        w = min(ref.shape[1], written.shape[1])
        value = im.psnr(im.crop(written, 0, 0, w, h), im.crop(ref, 0, 0, w, h))
        print(f"psnr_db={_format_db(value)}")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = _load_pipeline_config(args)
    if args.print_config:
        sys.stdout.write(cfgmod.format_config(cfg))
    rows = stages.benchmark(args.gt_dir, cfg.factor, cfg)
    with open(args.csv, "w", encoding="ascii", newline="") as fh:
        fh.write("image,bicubic_db,mister_db\n")
        for name, bic, out in rows:
            fh.write(f"{name},{_format_db(bic)},{_format_db(out)}\n")
    return 0


def _cmd_downsample(args) -> int:
    cfg = _load_pipeline_config(args)
    if args.print_config:
        sys.stdout.write(cfgmod.format_config(cfg))
    img = im.load_image(args.input)
    im.save_image(im.downsample(img, cfg.factor), args.output)
    return 0


def _cmd_psnr(args) -> int:
    if args.print_config:
        sys.stdout.write(cfgmod.format_config(_load_pipeline_config(args)))
    a = im.load_image(args.image_a)
    b = im.load_image(args.image_b)
    print(f"psnr_db={_format_db(im.psnr(a, b))}")
    return 0


_COMMANDS = {
    "interpolate": _cmd_interpolate,
    "benchmark": _cmd_benchmark,
    "downsample": _cmd_downsample,
    "psnr": _cmd_psnr,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
