"""Pure-numpy bootstrap kernels (fallback backend).

Both kernels consume per-cluster sufficient statistics, never raw rows:
a cluster's contribution to any refit is (X_g'X_g, X_g'Y_g), so resampled
OLS reduces to summing those blocks.  The compiled backend implements the
same contracts; see `clustercrit._kernels` for dispatch.
"""

from __future__ import annotations

import numpy as np

# A draw whose scores all fall below this fraction of their
# pre-cancellation magnitude has zero variance up to rounding noise.
DEGENERATE_RTOL = 1e-12


def pairs_abs_tstats(
    gram: np.ndarray,
    xty: np.ndarray,
    lam: np.ndarray,
    center: float,
    idx: np.ndarray,
    rcond: float = 1e-10,
) -> tuple[np.ndarray, int, int]:
    """Absolute studentized statistics for pairs cluster resamples.

    gram:   (G,k,k) per-cluster X_g'X_g of the original sample
    xty:    (G,k)   per-cluster X_g'Y_g
    lam:    (k,)    test weights
    center: original lambda' beta_hat (statistics are recentred at it)
    idx:    (B,G) resampled cluster indices, one row per draw

    Returns (|t*| per draw, #draws needing the pseudo-inverse, #degenerate
    draws).  A draw whose resampled Gram matrix is numerically singular
    (singular values below rcond * s_max) is solved with the Moore-Penrose
    pseudo-inverse; a draw with zero variance gets |t*| = +inf.
    """
    B, R = idx.shape
    G, k = xty.shape
    counts = np.zeros((B, G))
    for b in range(B):
        counts[b] = np.bincount(idx[b], minlength=G)

    gram_bar = (counts @ gram.reshape(G, k * k)).reshape(B, k, k) / G
    xty_bar = counts @ xty / G

    u, s, vt = np.linalg.svd(gram_bar)
    cut = s <= rcond * s[:, :1]
    n_pinv = int(np.any(cut, axis=1).sum())
    sinv = np.where(cut, 0.0, np.divide(1.0, s, out=np.zeros_like(s), where=~cut))
    pinv = (vt.transpose(0, 2, 1) * sinv[:, None, :]) @ u.transpose(0, 2, 1)

    beta = np.einsum("bij,bj->bi", pinv, xty_bar)
    w = np.einsum("bij,j->bi", pinv, lam)  # Pi* lambda per draw

    # e[b,g] = w_b' (X_g'Y_g - X_g'X_g beta_b) for every original cluster
    t1 = w @ xty.T
    t2 = np.einsum("bgj,bj->bg", np.einsum("bi,gij->bgj", w, gram), beta)
    e = t1 - t2
    sig2 = np.einsum("bg,bg->b", counts, e * e) / G
    scale = np.max((np.abs(t1) + np.abs(t2)) * (counts > 0), axis=1)

    num = np.sqrt(G) * (beta @ lam - center)
    degen = sig2 <= (DEGENERATE_RTOL * scale) ** 2
    n_degen = int(degen.sum())
    out = np.empty(B)
    out[degen] = np.inf
    ok = ~degen
    out[ok] = np.abs(num[ok]) / np.sqrt(sig2[ok])
    return out, n_pinv, n_degen


def wcb_abs_tstats(
    proj: np.ndarray,
    dscore: np.ndarray,
    a_inv: np.ndarray,
    cscore: np.ndarray,
    lam: np.ndarray,
    signs: np.ndarray,
) -> tuple[np.ndarray, int, int]:
    """Absolute studentized statistics for wild cluster sign flips.

    proj:   (G,k) X_g'X_g A^{-1} lambda with A the pooled (unaveraged) Gram
    dscore: (G,)  lambda' A^{-1} X_g' u_tilde_g
    a_inv:  (k,k) inverse of the pooled Gram matrix
    cscore: (G,k) per-cluster X_g' u_tilde_g of the restricted fit
    signs:  (B,G) +/-1 per cluster per draw

    The refitted Gram matrix never changes, so each draw is one k-solve.
    Returns (|t*|, 0, #degenerate draws); a draw whose scores all vanish
    gets |t*| = 0 (null data).
    """
    m = signs @ cscore  # (B,k)
    delta = m @ a_inv  # a_inv is symmetric
    num = delta @ lam
    t2 = delta @ proj.T
    shat = signs * dscore[None, :] - t2
    denom2 = np.einsum("bg,bg->b", shat, shat)
    G = signs.shape[1]
    scale = np.max(np.abs(dscore)[None, :] + np.abs(t2), axis=1)
    degen = denom2 <= G * (DEGENERATE_RTOL * scale) ** 2
    n_degen = int(degen.sum())
    out = np.zeros(signs.shape[0])
    ok = ~degen
    out[ok] = np.abs(num[ok]) / np.sqrt(denom2[ok])
    return out, 0, n_degen
