"""Spatially-variant aliasing removal and bias-corrected guide construction.

Strongly aliased regions keep their dominant local orientations when each
patch is projected onto the top principal components of a union of similar
patch groups gathered around its 3x3 neighborhood.  Repeating that projection
and upscaling yields an aliasing-removed image; interpolate/blur rounds then
restore the secondary-direction detail the projection suppresses, producing
the guide image used by the refinement stages.
"""

from __future__ import annotations

import numpy as np

from .config import GuideConfig, SvarConfig
from .image import as_image, bicubic_interpolate, gaussian_lowpass
from .patches import (
    PatchGroup,
    _l1_map,
    _topk_ranked,
    _window_shifts,
    search_similar,
)

__all__ = [
    "union_group",
    "projection_pass",
    "remove_aliasing",
    "build_guide",
]

_SEED_OFFSETS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)]
_CHUNK = 512


def tiling_origins(extent: int, side: int, stride: int) -> np.ndarray:
    """1-D tiling origins at the given stride, with a final origin clamped to cover the end."""
    last = extent - side
    if last < 0:
        raise ValueError(f"patch side {side} exceeds extent {extent}")
    xs = list(range(0, last + 1, stride))
    if xs[-1] != last:
        xs.append(last)
    return np.asarray(xs, dtype=np.int64)


def union_group(img_lp, target_origin: tuple[int, int], side: int,
                group_size: int, window: int) -> PatchGroup:
    """Union of the top similar patches of each 3x3 neighbor of the target origin.

    Each of the nine seed origins contributes its `group_size` nearest patches
    by L1 distance (the seed itself included) searched in a window centered on
    that seed; duplicates collapse by origin.
    """
    img_lp = as_image(img_lp)
    tr, tc = int(target_origin[0]), int(target_origin[1])
    rmax, cmax = img_lp.shape[0] - side, img_lp.shape[1] - side
    seen = {}
    for dr, dc in _SEED_OFFSETS:
        sr, sc = tr + dr, tc + dc
        if sr < 0 or sc < 0 or sr > rmax or sc > cmax:
            raise ValueError(f"neighborhood origin ({sr},{sc}) outside valid patch origins")
        found = search_similar(
            img_lp, (sr, sc), side, window, k=group_size,
            metric="exp_l1", c_w=1.0, include_self=True,
        )
        for origin in found.origins:
            seen.setdefault((int(origin[0]), int(origin[1])), None)
    origins = np.array(sorted(seen), dtype=np.int64)
    rows = np.stack([img_lp[r : r + side, c : c + side].ravel() for r, c in origins])
    return PatchGroup(side, rows, origins)


def _seed_topk(dist_maps: np.ndarray, shifts: np.ndarray, seed_r: np.ndarray,
               seed_c: np.ndarray, k: int):
    """Top-k candidate origins per seed from precomputed distance maps.

    dist_maps: (n_shifts, Ho, Wo) L1 distances; seeds index the origin grid.
    Returns candidate (rows, cols, valid), each (k, m).
    """
    scores = -dist_maps[:, seed_r, seed_c]
    idx, sc = _topk_ranked(scores, k)
    cand_r = seed_r[None, :] + shifts[idx, 0]
    cand_c = seed_c[None, :] + shifts[idx, 1]
    valid = np.isfinite(sc)
    return cand_r, cand_c, valid


def projection_pass(img_lp, cfg: SvarConfig) -> np.ndarray:
    """One sweep of per-patch projection onto union-group principal components.

    For every target patch: gather the deduplicated 3x3-neighborhood union
    group, center it, and replace the target by its projection onto the top
    principal components of the centered group (mean re-added).  Overlapping
    results average per pixel.
    """
    img = as_image(img_lp)
    cfg.validate()
    n = cfg.patch_side
    h, w = img.shape
    if h < n or w < n:
        raise ValueError(f"image {img.shape} too small for patch side {n}")
    rows = tiling_origins(h, n, cfg.stride)
    cols = tiling_origins(w, n, cfg.stride)
    # seed origins must accommodate the +-1 neighborhood
    radius = (cfg.window - 1) // 2
    shift_list = _window_shifts(radius, include_zero=True)
    shifts = np.asarray(shift_list, dtype=np.int64)
    dist_maps = np.stack([_l1_map(img, n, dr, dc) for dr, dc in shift_list])

    targ_r = np.repeat(rows, cols.size)
    targ_c = np.tile(cols, rows.size)
    m = targ_r.size
    group_cap = 9 * cfg.group_size

    cand_r = np.empty((group_cap, m), dtype=np.int64)
    cand_c = np.empty((group_cap, m), dtype=np.int64)
    valid = np.empty((group_cap, m), dtype=bool)
    rmax, cmax = h - n, w - n
    for i, (dr, dc) in enumerate(_SEED_OFFSETS):
        seed_r = np.clip(targ_r + dr, 0, rmax)
        seed_c = np.clip(targ_c + dc, 0, cmax)
        lo = i * cfg.group_size
        hi = lo + cfg.group_size
        got = _seed_topk(dist_maps, shifts, seed_r, seed_c, cfg.group_size)
        got_r, got_c, got_v = got
        take = got_r.shape[0]
        cand_r[lo : lo + take], cand_r[lo + take : hi] = got_r, 0
        cand_c[lo : lo + take], cand_c[lo + take : hi] = got_c, 0
        valid[lo : lo + take], valid[lo + take : hi] = got_v, False
    del dist_maps

    # deduplicate by origin within each column (set semantics)
    flat = cand_r * w + cand_c
    flat[~valid] = -1
    order = np.argsort(flat, axis=0, kind="stable")
    flat_sorted = np.take_along_axis(flat, order, axis=0)
    dup = np.zeros_like(valid)
    dup[1:] = flat_sorted[1:] == flat_sorted[:-1]
    cand_r = np.take_along_axis(cand_r, order, axis=0)
    cand_c = np.take_along_axis(cand_c, order, axis=0)
    valid = np.take_along_axis(valid, order, axis=0) & ~dup
    cand_r[~valid] = 0
    cand_c[~valid] = 0

    off_r = (np.arange(n * n) // n).astype(np.int64)
    off_c = (np.arange(n * n) % n).astype(np.int64)
    acc = np.zeros(h * w)
    cov = np.zeros(h * w)
    keep = min(cfg.components, n * n)

    for lo in range(0, m, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, m))
        b_r, b_c, b_v = cand_r[:, sl].T, cand_c[:, sl].T, valid[:, sl].T  # (B, G)
        group = img[b_r[:, :, None] + off_r, b_c[:, :, None] + off_c]     # (B, G, n²)
        group = np.where(b_v[:, :, None], group, 0.0)
        counts = b_v.sum(axis=1, keepdims=True)
        mean = group.sum(axis=1, keepdims=True) / counts[:, :, None]
        centered = np.where(b_v[:, :, None], group - mean, 0.0)

        target = img[targ_r[sl, None] + off_r, targ_c[sl, None] + off_c]  # (B, n²)
        t_centered = target - mean[:, 0, :]

        gram = np.einsum("bgp,bgq->bpq", centered, centered, optimize=True)
        eigvecs = np.linalg.eigh(gram)[1][:, :, -keep:]                   # (B, n², keep)
        coords = np.einsum("bpk,bp->bk", eigvecs, t_centered, optimize=True)
        projected = np.einsum("bpk,bk->bp", eigvecs, coords, optimize=True)
        # orthogonal projection cannot grow the centered target
        assert np.all(
            np.einsum("bp,bp->b", projected, projected)
            <= np.einsum("bp,bp->b", t_centered, t_centered) + 1e-6
        ), "projection must be non-expansive"
        result = projected + mean[:, 0, :]

        idx = ((targ_r[sl, None] + off_r) * w + (targ_c[sl, None] + off_c)).ravel()
        acc += np.bincount(idx, weights=result.ravel(), minlength=h * w)
        cov += np.bincount(idx, minlength=h * w)

    assert cov.min() > 0, "tiling must cover every pixel"
    return (acc / cov).reshape(h, w)


def remove_aliasing(img_l, cfg: SvarConfig, factor: int) -> np.ndarray:
    """Low-pass filter, run the projection sweeps, and upscale to the target size."""
    img = as_image(img_l)
    cfg.validate()
    out = gaussian_lowpass(img, cfg.gaussian_side, cfg.gaussian_sigma)
    for iteration in range(cfg.iterations):
        if iteration > 0 and cfg.prefilter_each_iteration:
            out = gaussian_lowpass(out, cfg.gaussian_side, cfg.gaussian_sigma)
        out = projection_pass(out, cfg)
    return bicubic_interpolate(out, factor)


def build_guide(img_l, svar_cfg: SvarConfig, guide_cfg: GuideConfig, factor: int,
                stage1_runner, aliasing_removed=None) -> np.ndarray:
    """Aliasing-removed guide with interpolate/blur rounds correcting the edge bias.

    `stage1_runner(img_l, guide) -> image` supplies the interpolation pass (a
    dependency injection that keeps this module independent of the stages).
    A precomputed aliasing-removed image may be passed to avoid recomputation.
    """
    img = as_image(img_l)
    guide_cfg.validate()
    if aliasing_removed is None:
        guide = remove_aliasing(img, svar_cfg, factor)
    else:
        guide = as_image(aliasing_removed)
    for _ in range(guide_cfg.interp_rounds):
        interpolated = stage1_runner(img, guide)
        guide = gaussian_lowpass(interpolated, guide_cfg.blur_side, guide_cfg.blur_sigma)
    return guide
