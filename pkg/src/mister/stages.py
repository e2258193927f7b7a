"""Progressive refinement stages and the end-to-end interpolation pipeline.

The pipeline upscales a low-resolution image by placing its samples on the
measurement grid of the target canvas and refining the remaining pixels in
four passes:

1. measured pixels of phase-matched similar patches serve as bases, with
   weights estimated from measured-phase guide pixels only;
2. the same reconstruction with weights estimated from all patch pixels;
3. every patch (any phase) is approximated by a cosine-matched group on the
   mean-removed image, refreshing its off-grid pixel classes;
4. (factor 2 only) each patch group is denoised by weighted singular-value
   shrinkage and the measurement grid is re-imposed.

Everything runs on a reflectively padded frame that is cropped at the end.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import replace

import numpy as np

from .aliasing import build_guide, remove_aliasing, tiling_origins
from .config import PipelineConfig, Stage1Config, Stage2Config, Stage3Config, Stage4Config
from .image import (
    as_image,
    bicubic_interpolate,
    crop,
    downsample,
    gaussian_lowpass,
    load_image,
    measured_mean,
    psnr,
    reflect_pad,
    upsample_zero_fill,
)
from .numerics import _ridge_solve_batch, _wnnm_shrink_batch
from .patches import (
    _cosine_map,
    _l1_map,
    _sqnorm_map,
    _topk_ranked,
    _window_shifts,
    measured_indices,
    phase_indices,
    phase_residues,
)

__all__ = ["stage1", "stage2", "stage3", "stage4", "interpolate", "benchmark"]

_CHUNK = 4096
_EXP_CLIP = 700.0  # keeps penalty ratios finite


def _target_grid(h: int, w: int, side: int, stride: int):
    rows = tiling_origins(h, side, stride)
    cols = tiling_origins(w, side, stride)
    return np.repeat(rows, cols.size), np.tile(cols, rows.size), rows, cols


def _patch_offsets(side: int):
    flat = np.arange(side * side)
    return (flat // side).astype(np.int64), (flat % side).astype(np.int64)


def _gather(img: np.ndarray, r, c, off_r, off_c) -> np.ndarray:
    """Patch-pixel gather: img at (r + off_r, c + off_c) with broadcasting."""
    return img[r[..., None] + off_r, c[..., None] + off_c]


class _Accumulator:
    """Deterministic scatter-average of patch contributions."""

    def __init__(self, h: int, w: int):
        self.h, self.w = h, w
        self.acc = np.zeros(h * w)
        self.cov = np.zeros(h * w)

    def add(self, idx: np.ndarray, values: np.ndarray) -> None:
        self.acc += np.bincount(idx, weights=values, minlength=self.h * self.w)
        self.cov += np.bincount(idx, minlength=self.h * self.w)

    def average(self) -> np.ndarray:
        assert self.cov.min() > 0, "target tiling must cover every pixel"
        return (self.acc / self.cov).reshape(self.h, self.w)


# ---------------------------------------------------------------------------
# Phase-wise reconstruction (stages 1 and 2)
# ---------------------------------------------------------------------------

def _phase_search(search_guide, side, window, k, s, rows, cols, targ_r, targ_c):
    """Per intra-phase class: top-k donor origins around each measured-grid target.

    Donors for intra-phase f carry measured pixels at their intra-f offsets,
    which pins their origin residue to -f mod s (for factor 2 that is f itself).
    """
    radius = (window - 1) // 2
    found = {}
    for ph in phase_residues(s):
        if ph == (0, 0):
            continue
        residue = ((s - ph[0]) % s, (s - ph[1]) % s)
        shift_list = _window_shifts(radius, residue=residue, factor=s)
        shifts = np.asarray(shift_list, dtype=np.int64)
        scores = np.empty((len(shift_list), targ_r.size))
        for i, (dr, dc) in enumerate(shift_list):
            dist = _l1_map(search_guide, side, dr, dc)
            scores[i] = -dist[np.ix_(rows, cols)].ravel()
        idx, sc = _topk_ranked(scores, k)
        valid = np.isfinite(sc)
        cand_r = targ_r[None, :] + shifts[idx, 0]
        cand_c = targ_c[None, :] + shifts[idx, 1]
        cand_r[~valid] = 0
        cand_c[~valid] = 0
        found[ph] = (cand_r, cand_c, -sc, valid)
    return found


def _phase_pass(z, search_guide, weight_guide, side, window, lam, c_w_rel, k, s,
                compact_weights):
    """One reconstruction sweep over measured-grid targets.

    `z` holds the true samples on the measurement grid (zeros elsewhere) and
    always supplies the reconstruction bases.  Weights are regressed on
    `weight_guide` patches — restricted to measured-phase pixels when
    `compact_weights` is set.  `lam` is scaled by the mean squared basis norm,
    the similarity decay `c_w_rel` by the pixel count.
    """
    h, w = z.shape
    targ_r, targ_c, rows, cols = _target_grid(h, w, side, s)
    assert rows[-1] % s == 0 and cols[-1] % s == 0, "targets must sit on the measured grid"
    found = _phase_search(search_guide, side, window, k, s, rows, cols, targ_r, targ_c)

    c_w_eff = c_w_rel * side * side
    all_off_r, all_off_c = _patch_offsets(side)
    oo_idx = measured_indices(side, s)
    w_idx = oo_idx if compact_weights else np.arange(side * side)
    out = _Accumulator(h, w)

    for lo in range(0, targ_r.size, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, targ_r.size))
        tr, tc = targ_r[sl], targ_c[sl]
        phat = np.empty((tr.size, side * side))
        phat[:, oo_idx] = _gather(z, tr, tc, all_off_r[oo_idx], all_off_c[oo_idx])
        target_w = _gather(weight_guide, tr, tc, all_off_r[w_idx], all_off_c[w_idx])
        # the regression runs on deviations from the target's mean level, so
        # ridge shrinkage cannot darken flat regions; the level is re-added
        dc = target_w.mean(axis=1, keepdims=True)

        for ph, (cand_r, cand_c, dist, valid) in found.items():
            br, bc = cand_r[:, sl].T, cand_c[:, sl].T
            bv, bd = valid[:, sl].T, dist[:, sl].T

            q = _gather(weight_guide, br, bc, all_off_r[w_idx], all_off_c[w_idx]) - dc[:, :, None]
            qz = np.where(bv[:, :, None], q, 0.0)
            energy = np.einsum("bkp,bkp->bk", qz, qz, optimize=True)
            lam_eff = lam * energy.sum(axis=1) / np.maximum(bv.sum(axis=1), 1)
            pen = np.exp(np.clip((bd - bd[:, :1]) / c_w_eff, 0.0, _EXP_CLIP))
            pen = np.where(bv, pen, 1.0)
            omega = _ridge_solve_batch(q, target_w - dc, lam_eff, pen, valid=bv)

            ph_idx = phase_indices(side, ph, s)
            donors = _gather(z, br, bc, all_off_r[ph_idx], all_off_c[ph_idx]) - dc[:, :, None]
            blend = dc + np.einsum(
                "bk,bkp->bp", omega, np.where(bv[:, :, None], donors, 0.0), optimize=True
            )
            none_valid = ~bv.any(axis=1)
            if np.any(none_valid):
                blend[none_valid] = _gather(
                    weight_guide, tr[none_valid], tc[none_valid],
                    all_off_r[ph_idx], all_off_c[ph_idx],
                )
            phat[:, ph_idx] = blend

        idx = ((tr[:, None] + all_off_r) * w + (tc[:, None] + all_off_c)).ravel()
        out.add(idx, phat.ravel())

    result = out.average()
    result[::s, ::s] = z[::s, ::s]  # strip fp summation noise off the measured grid
    return result


def stage1(img_l, guide, cfg: Stage1Config, factor: int,
           weight_guide_first=None, snapshots: dict | None = None) -> np.ndarray:
    """Initial refinement: measured bases, measured-phase weight regression.

    The first iteration uses the wide (n_a, w_a, lambda_a) parameters and the
    supplied guide; later iterations re-search on the evolving result with the
    (n_b, w_b, lambda_b) set.  `weight_guide_first` optionally replaces the
    weight-regression image in iteration one (the selection still uses
    `guide`), and `snapshots` captures the first-iteration output under "s1a".
    """
    img_l = as_image(img_l)
    s = int(factor)
    cfg.validate(s)
    hr_shape = (s * img_l.shape[0], s * img_l.shape[1])
    guide = as_image(guide)
    if guide.shape != hr_shape:
        raise ValueError(f"guide shape {guide.shape} does not match target {hr_shape}")
    z = upsample_zero_fill(img_l, s, hr_shape)
    g = guide
    for iteration in range(cfg.iterations):
        if iteration == 0:
            side, window, lam = cfg.n_a, cfg.w_a, cfg.lambda_a
            wg = weight_guide_first if weight_guide_first is not None else g
        else:
            side, window, lam = cfg.n_b, cfg.w_b, cfg.lambda_b
            wg = g
        g = _phase_pass(z, g, wg, side, window, lam, cfg.c_w, cfg.k, s,
                        compact_weights=True)
        if iteration == 0 and snapshots is not None:
            snapshots["s1a"] = g.copy()
    return g


def stage2(img_s1, cfg: Stage2Config, factor: int) -> np.ndarray:
    """Refinement with weights regressed on every patch pixel.

    The measured substrate is frozen from the input's grid values, which the
    previous stage preserves exactly.
    """
    g = as_image(img_s1)
    s = int(factor)
    cfg.validate(s)
    z = np.zeros_like(g)
    z[::s, ::s] = g[::s, ::s]
    for _ in range(cfg.iterations):
        g = _phase_pass(z, g, g, cfg.n, cfg.w, cfg.lam, cfg.c_w, cfg.k, s,
                        compact_weights=False)
    return g


# ---------------------------------------------------------------------------
# Correlation-matched refinement (stage 3)
# ---------------------------------------------------------------------------

def _any_phase_search(guide, side, window, k, stride, metric):
    """Self-first groups for targets tiling every phase class.

    Returns target coordinates plus (k, m) candidate coordinates, similarity
    scores (exact 1.0 self entries first), and validity.  `metric` is
    "cosine" or "l1" (L1 returns negated distances as scores).
    """
    h, w = guide.shape
    targ_r, targ_c, rows, cols = _target_grid(h, w, side, stride)
    radius = (window - 1) // 2
    shift_list = _window_shifts(radius, include_zero=False)
    shifts = np.asarray(shift_list, dtype=np.int64)
    scores = np.empty((len(shift_list), targ_r.size))
    if metric == "cosine":
        norms = np.sqrt(np.maximum(_sqnorm_map(guide, side), 0.0))
        for i, (dr, dc) in enumerate(shift_list):
            sim = _cosine_map(guide, side, dr, dc, norms)
            scores[i] = sim[np.ix_(rows, cols)].ravel()
    else:
        for i, (dr, dc) in enumerate(shift_list):
            dist = _l1_map(guide, side, dr, dc)
            scores[i] = -dist[np.ix_(rows, cols)].ravel()
    idx, sc = _topk_ranked(scores, k - 1)
    valid = np.isfinite(sc)
    cand_r = targ_r[None, :] + shifts[idx, 0]
    cand_c = targ_c[None, :] + shifts[idx, 1]
    cand_r[~valid] = 0
    cand_c[~valid] = 0

    m = targ_r.size
    ones = np.ones((1, m))
    cand_r = np.vstack([targ_r[None, :], cand_r])
    cand_c = np.vstack([targ_c[None, :], cand_c])
    sims = np.vstack([ones, sc])
    valid = np.vstack([ones.astype(bool), valid])
    return targ_r, targ_c, cand_r, cand_c, sims, valid


def _correlation_pass(g, side, window, lam, k, s, stride, floor):
    """One stage-3 sweep: blend cosine-matched groups into off-grid pixel classes."""
    h, w = g.shape
    targ_r, targ_c, cand_r, cand_c, sims, valid = _any_phase_search(
        g, side, window, k, stride, metric="cosine"
    )
    all_off_r, all_off_c = _patch_offsets(side)
    refresh_idx = phase_indices(side, "R", s)
    out = _Accumulator(h, w)

    for lo in range(0, targ_r.size, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, targ_r.size))
        tr, tc = targ_r[sl], targ_c[sl]
        br, bc = cand_r[:, sl].T, cand_c[:, sl].T
        bv, bs = valid[:, sl].T, sims[:, sl].T

        raw = _gather(g, br, bc, all_off_r, all_off_c)   # (B, K, n²)
        target = raw[:, 0, :]
        zero_norm = np.einsum("bp,bp->b", target, target, optimize=True) == 0.0
        dc = target.mean(axis=1, keepdims=True)
        q = raw - dc[:, :, None]
        qz = np.where(bv[:, :, None], q, 0.0)
        energy = np.einsum("bkp,bkp->bk", qz, qz, optimize=True)
        lam_eff = lam * energy.sum(axis=1) / np.maximum(bv.sum(axis=1), 1)
        clamped = np.maximum(bs, floor)
        pen = np.where(bv, clamped[:, :1] / clamped, 1.0)
        omega = _ridge_solve_batch(q, target - dc, lam_eff, pen, valid=bv)
        blend = dc + np.einsum("bk,bkp->bp", omega, qz, optimize=True)

        phat = target.copy()
        phat[:, refresh_idx] = blend[:, refresh_idx]
        # zero-norm targets pass through unchanged (cosine is undefined there)
        phat[zero_norm] = target[zero_norm]

        idx = ((tr[:, None] + all_off_r) * w + (tc[:, None] + all_off_c)).ravel()
        out.add(idx, phat.ravel())
    return out.average()


def stage3(img_s2, cfg: Stage3Config, factor: int) -> np.ndarray:
    """Polarity-aware refinement on the image minus its measured-pixel mean."""
    img = as_image(img_s2)
    s = int(factor)
    cfg.validate(s)
    c = measured_mean(img, s)
    g = img - c
    for iteration in range(cfg.iters_a + cfg.iters_b):
        if iteration < cfg.iters_a:
            side, window, lam = cfg.n_a, cfg.w_a, cfg.lambda_a
        else:
            side, window, lam = cfg.n_b, cfg.w_b, cfg.lambda_b
        g = _correlation_pass(g, side, window, lam, cfg.k, s, cfg.stride,
                              cfg.similarity_floor)
    return g + c


# ---------------------------------------------------------------------------
# Low-rank group refinement (stage 4)
# ---------------------------------------------------------------------------

def _lowrank_pass(g, side, window, k, alpha, th, eps, stride, double_alpha):
    """One stage-4 sweep: shrink each high-variance group's singular values."""
    h, w = g.shape
    targ_r, targ_c, cand_r, cand_c, _sims, valid = _any_phase_search(
        g, side, window, k, stride, metric="l1"
    )
    all_off_r, all_off_c = _patch_offsets(side)
    out = _Accumulator(h, w)

    for lo in range(0, targ_r.size, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, targ_r.size))
        br, bc = cand_r[:, sl].T, cand_c[:, sl].T
        bv = valid[:, sl].T

        x = _gather(g, br, bc, all_off_r, all_off_c)     # (B, K, n²)
        counts = bv.sum(axis=1)
        mean = (np.where(bv[:, :, None], x, 0.0).sum(axis=1) / counts[:, None])[:, None, :]
        centered = np.where(bv[:, :, None], x - mean, 0.0)

        target = x[:, 0, :]
        variance = target.var(axis=1)
        gate = variance > th
        shrunk = centered.copy()
        if np.any(gate):
            # zeroed invalid rows do not perturb the singular values
            shrunk[gate] = _wnnm_shrink_batch(centered[gate], alpha, eps, double_alpha)
        contrib = shrunk + mean

        keep = bv.ravel()
        idx = ((br[:, :, None] + all_off_r) * w + (bc[:, :, None] + all_off_c))
        idx = idx.reshape(keep.size, -1)[keep].ravel()
        values = contrib.reshape(keep.size, -1)[keep].ravel()
        out.add(idx, values)
    return out.average()


def stage4(img_s3, img_l, cfg: Stage4Config, factor: int) -> np.ndarray:
    """Group-wise low-rank refinement; only defined for the factor-2 pipeline.

    After every iteration the measurement grid is overwritten with the
    original low-resolution samples.
    """
    s = int(factor)
    if s != 2:
        raise ValueError("the low-rank stage runs only in the factor-2 pipeline")
    img = as_image(img_s3)
    img_l = as_image(img_l)
    cfg.validate(s)
    if img.shape != (2 * img_l.shape[0], 2 * img_l.shape[1]):
        raise ValueError(f"shape mismatch: {img.shape} vs low-resolution {img_l.shape}")
    g = img.copy()
    for iteration in range(cfg.iters_a + cfg.iters_b):
        if iteration < cfg.iters_a:
            side, alpha, th = cfg.n_a, cfg.alpha_a, cfg.th_a
        else:
            side, alpha, th = cfg.n_b, cfg.alpha_b, cfg.th_b
        g = _lowrank_pass(g, side, cfg.w, cfg.k, alpha, th, cfg.eps, cfg.stride,
                          cfg.double_alpha)
        g[::2, ::2] = img_l
    return g


# ---------------------------------------------------------------------------
# Pipeline orchestration
# ---------------------------------------------------------------------------

def interpolate(img_l, cfg: PipelineConfig, return_stages: bool = False):
    """Upscale `img_l` by cfg.factor through guide construction and all stages.

    Runs on a reflectively padded frame (cfg.pad low-resolution pixels) and
    crops back.  `return_stages` additionally yields the cropped intermediate
    images keyed ar/guide/s1a/s1/s2/s3/s4 (those that the guide mode and
    factor produce).  The output carries the input samples bit-exactly on the
    measurement grid.
    """
    cfg.validate()
    img_l = as_image(img_l)
    s = cfg.factor
    pad = cfg.pad
    frame = reflect_pad(img_l, pad) if pad else img_l.copy()
    snaps: dict[str, np.ndarray] = {}

    def guide_stage1(lr, guide):
        inner = replace(cfg.stage1, iterations=cfg.guide.stage1_iterations)
        return stage1(lr, guide, inner, s)

    mode = cfg.guide_mode
    if mode in ("mister", "ec2", "ec4"):
        ar = remove_aliasing(frame, cfg.svar, s)
        snaps["ar"] = ar
        if mode == "ec4":
            guide = ar
        else:
            guide = build_guide(frame, cfg.svar, cfg.guide, s, guide_stage1,
                                aliasing_removed=ar)
    elif mode == "ec1":
        guide = bicubic_interpolate(frame, s)
    elif mode == "ec3":
        lowpassed = gaussian_lowpass(frame, cfg.guide.ec3_side, cfg.guide.ec3_sigma)
        guide = bicubic_interpolate(lowpassed, s)
    else:  # pragma: no cover - validate() rejects unknown modes
        raise ValueError(f"unknown guide mode {mode!r}")
    snaps["guide"] = guide

    weight_first = bicubic_interpolate(frame, s) if mode == "ec2" else None
    s1 = stage1(frame, guide, cfg.stage1, s, weight_guide_first=weight_first,
                snapshots=snaps)
    snaps["s1"] = s1
    s2 = stage2(s1, cfg.stage2, s)
    snaps["s2"] = s2
    s3 = stage3(s2, cfg.stage3, s)
    snaps["s3"] = s3
    if s == 2:
        final = stage4(s3, frame, cfg.stage4, s)
        snaps["s4"] = final
    else:
        final = s3.copy()
        final[::s, ::s] = frame  # measured samples are ground truth

    out_w, out_h = s * img_l.shape[1], s * img_l.shape[0]
    result = crop(final, s * pad, s * pad, out_w, out_h)
    assert np.array_equal(result[::s, ::s], img_l), "measurement grid must survive exactly"
    if return_stages:
        cropped = {k: crop(v, s * pad, s * pad, out_w, out_h) for k, v in snaps.items()}
        return result, cropped
    return result


def benchmark(gt_dir, factor: int, cfg: PipelineConfig):
    """Reference-protocol evaluation of a directory of ground-truth images.

    Each image is decimated by the factor and re-interpolated with plain cubic
    convolution and with the full pipeline; rows are (name, bicubic dB,
    pipeline dB) sorted by filename, with an AVERAGE row appended.
    """
    if cfg.factor != factor:
        raise ValueError(f"config factor {cfg.factor} does not match requested {factor}")
    names = sorted(
        f for f in os.listdir(gt_dir)
        if os.path.splitext(f)[1].lower() in (".pgm", ".png")
    )
    if not names:
        raise ValueError(f"no .pgm/.png images found in {gt_dir!r}")
    rows = []
    for name in names:
        path = os.path.join(gt_dir, name)
        try:
            gt = load_image(path)
        except (ValueError, OSError) as exc:
            warnings.warn(f"skipping {name}: {exc}")
            continue
        lr = downsample(gt, factor)
        h, w = gt.shape
        bic = crop(bicubic_interpolate(lr, factor), 0, 0, w, h)
        out = crop(interpolate(lr, cfg), 0, 0, w, h)
        rows.append((name, psnr(bic, gt), psnr(out, gt)))
    if not rows:
        raise ValueError(f"no readable images in {gt_dir!r}")
    bic_avg = float(np.mean([r[1] for r in rows]))
    out_avg = float(np.mean([r[2] for r in rows]))
    rows.append(("AVERAGE", bic_avg, out_avg))
    return rows
