"""Dense linear-algebra kernels: SVD, top-k projection, ridge, singular-value shrinkage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdResult",
    "svd",
    "project_topk",
    "ridge_solve",
    "wnnm_shrink",
]

_COND_LIMIT = 1e12
_JITTER_SCALE = 1e-8


@dataclass(frozen=True)
class SvdResult:
    """Full decomposition u @ diag(singulars) @ v.T with deterministic signs."""

    u: np.ndarray          # (m, m) orthogonal
    singulars: np.ndarray  # (min(m, n),) nonincreasing, nonnegative
    v: np.ndarray          # (n, n) orthogonal, right singular vectors as columns

    def reconstruct(self) -> np.ndarray:
        m, n = self.u.shape[0], self.v.shape[0]
        d = np.zeros((m, n))
        k = self.singulars.shape[0]
        d[:k, :k] = np.diag(self.singulars)
        return self.u @ d @ self.v.T


def svd(matrix) -> SvdResult:
    """Full SVD with each right singular vector's largest-magnitude entry positive."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"svd needs a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input contains non-finite entries")
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    v = vh.T.copy()
    u = u.copy()
    rank_cols = s.shape[0]
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
            if j < rank_cols and j < u.shape[1]:
                u[:, j] = -u[:, j]
    return SvdResult(u=u, singulars=s, v=v)


def project_topk(y, v, k: int) -> np.ndarray:
    """Orthogonal projection of `y` onto the span of the first k columns of `v`."""
    y = np.asarray(y, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    k = int(k)
    if y.ndim != 1 or v.ndim != 2 or v.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: y {y.shape} vs v {v.shape}")
    if not 1 <= k <= v.shape[1]:
        raise ValueError(f"k={k} out of range for {v.shape[1]} basis vectors")
    vk = v[:, :k]
    return vk @ (vk.T @ y)


def _symmetric_condition(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue-based condition estimate for stacked symmetric matrices."""
    w = np.linalg.eigvalsh(a)
    lo, hi = w[..., 0], w[..., -1]
    bad = (lo <= 0) | ~np.isfinite(lo) | ~np.isfinite(hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(bad, np.inf, hi / np.where(lo > 0, lo, 1.0))
    return cond, bad


def ridge_solve(basis, target, lam: float, penalty, return_info: bool = False):
    """Solve (QᵀQ + lam·P) w = Qᵀ target for the combination weights.

    `basis` is Q with one basis vector per column, `penalty` the diagonal
    penalty matrix (or its diagonal).  Near-singular systems fall back to a
    small trace-scaled ridge jitter; `return_info=True` also returns whether
    that fallback engaged.
    """
    q = np.asarray(basis, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if q.ndim != 2 or t.ndim != 1 or q.shape[0] != t.shape[0]:
        raise ValueError(f"shape mismatch: basis {q.shape} vs target {t.shape}")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    p = np.asarray(penalty, dtype=np.float64)
    k = q.shape[1]
    if p.ndim == 2:
        p = np.diag(p)
    if p.shape != (k,):
        raise ValueError(f"penalty diagonal must have length {k}, got shape {p.shape}")

    a = q.T @ q + lam * np.diag(p)
    rhs = q.T @ t
    cond, bad = _symmetric_condition(a[None])
    degenerate = bool(bad[0] or cond[0] > _COND_LIMIT)
    if degenerate:
        # absolute floor keeps all-zero systems solvable (weights become 0)
        a = a + (_JITTER_SCALE * np.trace(a) / k + 1e-12) * np.eye(k)
    w = np.linalg.solve(a, rhs)
    return (w, degenerate) if return_info else w


def _wnnm_thresholds(singulars: np.ndarray, alpha: float, eps: float,
                     n_pixels: int, double_alpha: bool) -> np.ndarray:
    sigma_hat = singulars / np.sqrt(float(n_pixels))
    tau = alpha / (sigma_hat + eps)
    if double_alpha:
        tau = alpha * tau
    assert np.all(np.diff(tau) >= -1e-9), "shrinkage thresholds must be nondecreasing"
    return tau


def wnnm_shrink(x, alpha: float, eps: float = 1e-6, double_alpha: bool = False) -> np.ndarray:
    """Adaptive singular-value soft-thresholding of a centered patch-group matrix.

    Each singular value is reduced by a threshold inversely proportional to its
    per-pixel signal estimate, so dominant components shrink least.  With
    `double_alpha` the strength parameter multiplies the threshold a second
    time (the alternative reading of the weighting).
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D group matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("group matrix contains non-finite entries")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if alpha == 0:
        return a.copy()
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    tau = _wnnm_thresholds(s, alpha, eps, a.shape[1], double_alpha)
    s_new = np.maximum(s - tau, 0.0)
    return (u * s_new) @ vh


# ---------------------------------------------------------------------------
# Batched variants used by the iterative stages
# ---------------------------------------------------------------------------

def _ridge_solve_batch(rows, targets, lam, penalty, valid=None):
    """Batched ridge weights for stacked problems.

    rows: (B, K, P) similar patches, one per row (so rows[b] is Qᵀ);
    targets: (B, P); lam: scalar or (B,); penalty: (B, K) diagonals;
    valid: optional (B, K) mask — invalid rows get weight exactly 0.
    """
    rows = np.asarray(rows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    b, k, _ = rows.shape
    if valid is not None:
        rows = np.where(valid[:, :, None], rows, 0.0)
    a = np.einsum("bkp,bqp->bkq", rows, rows, optimize=True)
    rhs = np.einsum("bkp,bp->bk", rows, targets, optimize=True)
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (b,))
    diag = np.arange(k)
    a[:, diag, diag] += lam[:, None] * penalty
    if valid is not None:
        # decouple invalid rows into trivial equations w_j = 0
        invalid = ~valid
        a[:, diag, diag] = np.where(invalid, 1.0, a[:, diag, diag])
        off = invalid[:, :, None] | invalid[:, None, :]
        off[:, diag, diag] = False
        a[off] = 0.0
        rhs[invalid] = 0.0
    cond, bad = _symmetric_condition(a)
    needs_jitter = bad | (cond > _COND_LIMIT)
    if np.any(needs_jitter):
        trace = a[:, diag, diag].sum(axis=1)
        bump = np.where(needs_jitter, _JITTER_SCALE * trace / k + 1e-12, 0.0)
        a[:, diag, diag] += bump[:, None]
    return np.linalg.solve(a, rhs[..., None])[..., 0]


def _wnnm_shrink_batch(x, alpha: float, eps: float, double_alpha: bool = False) -> np.ndarray:
    """Batched wnnm_shrink over a (B, K, P) stack of centered groups."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        return x.copy()
    if alpha == 0:
        return x.copy()
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    sigma_hat = s / np.sqrt(float(x.shape[2]))
    tau = alpha / (sigma_hat + eps)
    if double_alpha:
        tau = alpha * tau
    assert np.all(np.diff(tau, axis=1) >= -1e-9), "shrinkage thresholds must be nondecreasing"
    s_new = np.maximum(s - tau, 0.0)
    return np.einsum("bik,bk,bkj->bij", u, s_new, vh, optimize=True)
