"""Patch extraction/synthesis, pixel-phase taxonomy, similarity metrics, search.

A pixel's phase for factor ``s`` is the residue class ``(row % s, col % s)``;
the measured phase is ``(0, 0)``.  For s=2 the four classes carry the names
OO, OE, EO, EE (first letter: row parity, second: column parity, with "odd"
meaning the 1-based coordinate is odd, i.e. the 0-based index is even).
Intra-patch phase is the residue of the offset within the patch, independent
of where the patch sits in the image.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp

import numpy as np

from .image import as_image

__all__ = [
    "Patch",
    "PatchGroup",
    "SimilarityList",
    "classify_phase",
    "phase_of",
    "phase_residues",
    "phase_indices",
    "phase_mask",
    "measured_indices",
    "extract_patch",
    "synthesize_patches",
    "synthesize_groups",
    "similarity_exp_l1",
    "similarity_cosine",
    "search_similar",
    "penalty_matrix",
]

_PHASE_NAMES_X2 = {(0, 0): "OO", (0, 1): "OE", (1, 0): "EO", (1, 1): "EE"}
_PHASE_BY_NAME_X2 = {v: k for k, v in _PHASE_NAMES_X2.items()}


# ---------------------------------------------------------------------------
# Phase taxonomy
# ---------------------------------------------------------------------------

def phase_of(origin: tuple[int, int], factor: int = 2) -> tuple[int, int]:
    """Residue class (row % s, col % s) of a 0-based coordinate."""
    s = int(factor)
    return (int(origin[0]) % s, int(origin[1]) % s)


def classify_phase(origin: tuple[int, int]) -> str:
    """Parity class of a 0-based coordinate for factor 2: (0, 0) is OO."""
    return _PHASE_NAMES_X2[phase_of(origin, 2)]


def phase_residues(factor: int = 2) -> list[tuple[int, int]]:
    """All residue classes in row-major order; (0, 0) is the measured class."""
    s = int(factor)
    return [(i, j) for i in range(s) for j in range(s)]


def _resolve_phase(phase, factor: int) -> tuple[int, int]:
    if isinstance(phase, str):
        if factor != 2 or phase not in _PHASE_BY_NAME_X2:
            raise ValueError(f"unknown phase {phase!r} for factor {factor}")
        return _PHASE_BY_NAME_X2[phase]
    residue = (int(phase[0]), int(phase[1]))
    if not (0 <= residue[0] < factor and 0 <= residue[1] < factor):
        raise ValueError(f"phase residue {residue} out of range for factor {factor}")
    return residue


def phase_indices(side: int, phase, factor: int = 2) -> np.ndarray:
    """Scan-order flat indices of one intra-patch phase class.

    `phase` is a residue tuple, an s=2 name, or "R" for the union of every
    non-measured class.
    """
    side = int(side)
    s = int(factor)
    if side % s != 0:
        raise ValueError(f"patch side {side} must be divisible by factor {s}")
    grid = np.arange(side)
    rr, cc = np.meshgrid(grid % s, grid % s, indexing="ij")
    if isinstance(phase, str) and phase == "R":
        mask = (rr != 0) | (cc != 0)
    else:
        pr, pc = _resolve_phase(phase, s)
        mask = (rr == pr) & (cc == pc)
    return np.flatnonzero(mask.ravel())


def phase_mask(side: int, phase, factor: int = 2) -> np.ndarray:
    """Boolean selector of length side^2 realizing one phase class (or "R")."""
    mask = np.zeros(int(side) ** 2, dtype=bool)
    mask[phase_indices(side, phase, factor)] = True
    return mask


def measured_indices(side: int, factor: int = 2) -> np.ndarray:
    """Compacting selector: scan-order indices of the measured phase (side²/s² entries)."""
    return phase_indices(side, (0, 0), factor)


# ---------------------------------------------------------------------------
# Patches and synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Patch:
    """An n-by-n block vectorized row-major, remembering its image origin."""

    origin: tuple[int, int]
    side: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.side * self.side,):
            raise ValueError(
                f"patch values length {self.values.shape} does not match side {self.side}"
            )


@dataclass(frozen=True)
class PatchGroup:
    """A stack of same-sized patches, one per row, with their origins."""

    side: int
    rows: np.ndarray      # (count, side²)
    origins: np.ndarray   # (count, 2) int

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != self.side * self.side:
            raise ValueError(f"group rows shape {self.rows.shape} inconsistent with side {self.side}")
        if self.origins.shape != (self.rows.shape[0], 2):
            raise ValueError("group origins must be (count, 2)")

    @property
    def count(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class SimilarityList:
    """Search results ordered by descending similarity."""

    origins: np.ndarray   # (k, 2) int
    scores: np.ndarray    # (k,)
    shortfall: bool = False

    def __len__(self) -> int:
        return self.scores.shape[0]


def extract_patch(img, origin: tuple[int, int], side: int) -> Patch:
    """Copy the side-by-side block whose upper-left pixel is `origin`."""
    img = as_image(img)
    r, c = int(origin[0]), int(origin[1])
    side = int(side)
    if r < 0 or c < 0 or r + side > img.shape[0] or c + side > img.shape[1]:
        raise ValueError(f"patch at {origin} side {side} exceeds image {img.shape}")
    return Patch((r, c), side, img[r : r + side, c : c + side].ravel().copy())


def synthesize_patches(patches, canvas_shape: tuple[int, int]) -> np.ndarray:
    """Average overlapping patch contributions per pixel.

    Every canvas pixel must be covered by at least one patch.
    """
    h, w = int(canvas_shape[0]), int(canvas_shape[1])
    acc = np.zeros((h, w), dtype=np.float64)
    cov = np.zeros((h, w), dtype=np.float64)
    for p in patches:
        r, c = p.origin
        if r < 0 or c < 0 or r + p.side > h or c + p.side > w:
            raise ValueError(f"patch at {p.origin} side {p.side} exceeds canvas {(h, w)}")
        block = p.values.reshape(p.side, p.side)
        acc[r : r + p.side, c : c + p.side] += block
        cov[r : r + p.side, c : c + p.side] += 1.0
    hole = cov == 0
    if np.any(hole):
        r, c = np.argwhere(hole)[0]
        raise ValueError(f"synthesis hole at ({r},{c})")
    return acc / cov


def synthesize_groups(groups, canvas_shape: tuple[int, int]) -> np.ndarray:
    """Average contributions of every member patch of every group per pixel."""
    def flatten():
        for g in groups:
            for row, origin in zip(g.rows, g.origins):
                yield Patch((int(origin[0]), int(origin[1])), g.side, row)

    return synthesize_patches(flatten(), canvas_shape)


# ---------------------------------------------------------------------------
# Similarity metrics
# ---------------------------------------------------------------------------

def _paired_values(a: Patch, b: Patch) -> tuple[np.ndarray, np.ndarray]:
    if a.side != b.side:
        raise ValueError(f"patch side mismatch: {a.side} vs {b.side}")
    return a.values, b.values


def similarity_exp_l1(a: Patch, b: Patch, c_w: float) -> float:
    """exp(-||a-b||_1 / c_w): 1 for identical patches, decaying with L1 distance."""
    va, vb = _paired_values(a, b)
    if not c_w > 0:
        raise ValueError(f"c_w must be positive, got {c_w}")
    return exp(-float(np.abs(va - vb).sum()) / float(c_w))


def similarity_cosine(a: Patch, b: Patch) -> float:
    """Normalized inner product in [-1, 1]; opposite-polarity patches score -1."""
    va, vb = _paired_values(a, b)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for a zero-norm patch")
    return float(np.dot(va, vb)) / (na * nb)


# ---------------------------------------------------------------------------
# Windowed search (reference implementation)
# ---------------------------------------------------------------------------

def search_similar(
    guide,
    target_origin: tuple[int, int],
    side: int,
    window: int,
    k: int,
    metric: str = "exp_l1",
    c_w: float | None = None,
    phase_filter=None,
    factor: int = 2,
    include_self: bool | None = None,
) -> SimilarityList:
    """Rank the top-k most similar patches inside a window around the target.

    Candidate origins lie in a `window`-by-`window` box (odd side) centered at
    the target's upper-left pixel and must keep the patch inside the image.
    With a phase filter only origins of that residue class compete and the
    target's own origin is excluded; without one the target patch itself is
    ranked first (`include_self` overrides either default).  Ties are broken
    by distance from the target origin, then scan order.  If fewer than `k`
    candidates exist all of them are returned with the shortfall flag set.
    """
    guide = as_image(guide)
    side = int(side)
    window = int(window)
    k = int(k)
    if window % 2 == 0 or window < 1:
        raise ValueError(f"window side must be odd, got {window}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if metric not in ("exp_l1", "cosine"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "exp_l1" and not (c_w is not None and c_w > 0):
        raise ValueError("exp_l1 metric requires a positive c_w")
    tr, tc = int(target_origin[0]), int(target_origin[1])
    if include_self is None:
        include_self = phase_filter is None
    residue = None if phase_filter is None else _resolve_phase(phase_filter, factor)

    target = extract_patch(guide, (tr, tc), side)
    radius = (window - 1) // 2
    rmax, cmax = guide.shape[0] - side, guide.shape[1] - side

    entries = []
    for r in range(max(0, tr - radius), min(rmax, tr + radius) + 1):
        for c in range(max(0, tc - radius), min(cmax, tc + radius) + 1):
            if (r, c) == (tr, tc):
                continue
            if residue is not None and (r % factor, c % factor) != residue:
                continue
            cand = extract_patch(guide, (r, c), side)
            if metric == "exp_l1":
                # rank on the raw distance: exp(-d/c_w) can underflow to exact
                # ties for distant patches, which would corrupt the ordering
                rank_value = float(np.abs(target.values - cand.values).sum())
            else:
                nb = float(np.linalg.norm(cand.values))
                if nb == 0.0:
                    continue
                rank_value = -similarity_cosine(target, cand)
            d2 = (r - tr) ** 2 + (c - tc) ** 2
            entries.append((rank_value, d2, r, c))
    entries.sort()

    keep = k - 1 if include_self else k
    selected = entries[:keep]
    origins = [(tr, tc)] if include_self else []
    scores = [1.0] if include_self else []
    origins += [(r, c) for (_, _, r, c) in selected]
    if metric == "exp_l1":
        scores += [exp(-rank_value / c_w) for (rank_value, _, _, _) in selected]
    else:
        scores += [-rank_value for (rank_value, _, _, _) in selected]
    shortfall = len(origins) < k
    return SimilarityList(
        origins=np.array(origins, dtype=np.int64).reshape(-1, 2),
        scores=np.array(scores, dtype=np.float64),
        shortfall=shortfall,
    )


def penalty_matrix(similarities, floor: float | None = None) -> np.ndarray:
    """Diagonal penalty diag(S(1)/S(j)) from a descending similarity sequence.

    `floor` clamps nonpositive values (needed for the cosine metric) before
    the ratios are formed.
    """
    if isinstance(similarities, SimilarityList):
        scores = np.asarray(similarities.scores, dtype=np.float64)
    else:
        scores = np.asarray(similarities, dtype=np.float64)
    if scores.ndim != 1 or scores.size < 1:
        raise ValueError("similarities must be a non-empty 1-D sequence")
    if floor is not None:
        scores = np.maximum(scores, float(floor))
    if np.any(scores <= 0):
        raise ValueError("penalty ratios need strictly positive similarities; pass a floor")
    return np.diag(scores[0] / scores)


# ---------------------------------------------------------------------------
# Vectorized search maps (shared by the iterative stages)
# ---------------------------------------------------------------------------

def _window_sums(arr: np.ndarray, n: int) -> np.ndarray:
    """n-by-n box sums at every origin, via a summed-area table."""
    h, w = arr.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    sat[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)
    return sat[n:, n:] - sat[:-n, n:] - sat[n:, :-n] + sat[:-n, :-n]


def _overlap(img_shape: tuple[int, int], dr: int, dc: int):
    h, w = img_shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    return r0, r1, c0, c1


def _l1_map(img: np.ndarray, n: int, dr: int, dc: int) -> np.ndarray:
    """L1 patch distances D[o] = sum |img(o) - img(o+d)|; +inf where o+d is invalid."""
    h, w = img.shape
    out = np.full((h - n + 1, w - n + 1), np.inf)
    r0, r1, c0, c1 = _overlap(img.shape, dr, dc)
    if r1 - r0 >= n and c1 - c0 >= n:
        diff = np.abs(img[r0:r1, c0:c1] - img[r0 + dr : r1 + dr, c0 + dc : c1 + dc])
        out[r0 : r1 - n + 1, c0 : c1 - n + 1] = _window_sums(diff, n)
    return out


def _sqnorm_map(img: np.ndarray, n: int) -> np.ndarray:
    return _window_sums(img * img, n)


def _cosine_map(img: np.ndarray, n: int, dr: int, dc: int, norms: np.ndarray) -> np.ndarray:
    """Cosine similarity S[o] between patch(o) and patch(o+d); -inf where invalid.

    `norms` are the precomputed Euclidean patch norms at every origin.
    Zero-norm operands make a pair invalid.
    """
    h, w = img.shape
    out = np.full((h - n + 1, w - n + 1), -np.inf)
    r0, r1, c0, c1 = _overlap(img.shape, dr, dc)
    if r1 - r0 >= n and c1 - c0 >= n:
        prod = img[r0:r1, c0:c1] * img[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
        num = _window_sums(prod, n)
        na = norms[r0 : r1 - n + 1, c0 : c1 - n + 1]
        nb = norms[r0 + dr : r1 + dr - n + 1, c0 + dc : c1 + dc - n + 1]
        denom = na * nb
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), -np.inf)
        out[r0 : r1 - n + 1, c0 : c1 - n + 1] = vals
    return out


def _window_shifts(radius: int, residue=None, factor: int = 2, include_zero: bool = False):
    """Window offsets ordered by (distance², row, col) — the search tie order.

    `residue` filters by the residue of the offset itself; for targets on the
    measured grid that equals the candidate origin's phase class.
    """
    shifts = []
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if not include_zero and dr == 0 and dc == 0:
                continue
            if residue is not None and (dr % factor, dc % factor) != residue:
                continue
            shifts.append((dr, dc))
    shifts.sort(key=lambda d: (d[0] * d[0] + d[1] * d[1], d[0], d[1]))
    return shifts


def _topk_ranked(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k row indices per column of `scores`, higher first.

    Rows must already be ordered by the tie rank; equal scores resolve to the
    lower row index.  Invalid candidates are marked -inf.  Returns (indices,
    scores), each (k_eff, m).
    """
    n_cand, m = scores.shape
    k_eff = min(k, n_cand)
    if k_eff == 0 or m == 0:
        return (np.zeros((k_eff, m), dtype=np.int64), np.zeros((k_eff, m)))
    slack = min(n_cand, k_eff + 16)
    if slack == n_cand:
        order = np.argsort(-scores, axis=0, kind="stable")[:k_eff]
        return order, np.take_along_axis(scores, order, axis=0)

    part = np.argpartition(-scores, slack - 1, axis=0)[:slack]
    part.sort(axis=0)  # restore rank order so the stable sort breaks ties correctly
    psc = np.take_along_axis(scores, part, axis=0)
    order = np.argsort(-psc, axis=0, kind="stable")
    top_idx = np.take_along_axis(part, order[:k_eff], axis=0)
    top_sc = np.take_along_axis(psc, order[:k_eff], axis=0)

    # if the k-th score ties the worst kept score, the tie group may extend past
    # the partition boundary: redo those columns exactly
    kth = top_sc[k_eff - 1]
    worst_kept = psc.min(axis=0)
    bad = np.isfinite(kth) & (kth <= worst_kept)
    if np.any(bad):
        cols = np.flatnonzero(bad)
        sub = scores[:, cols]
        full = np.argsort(-sub, axis=0, kind="stable")[:k_eff]
        top_idx[:, cols] = full
        top_sc[:, cols] = np.take_along_axis(sub, full, axis=0)
    return top_idx, top_sc
