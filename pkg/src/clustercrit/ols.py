"""Clustered OLS, the cluster-robust variance, and the score decomposition.

The t-statistic tested here is sqrt(G) (lambda' beta_hat - c0) / sigma_hat
with sigma_hat^2 = (1/G) sum_g (lambda' Pi X_g' u_hat_g)^2 and
Pi = ((1/G) sum_g X_g'X_g)^{-1}.  The per-cluster score terms are also
rewritten as the sample means of independent cluster-level variables
(omega_1g scalars and omega_2g 2k-vectors coupled through a fixed matrix
Gamma); that decomposition is what the moment estimators consume.

Regressors are treated as fixed: all inference is conditional on the
realized X, which nothing in the computation depends on but readers of
the confidence intervals should know.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accum import gsum
from .data import ClusteredDataset, Hypothesis
from .errors import DegenerateVarianceError, RankError, ValidationError

# Relative cutoff below which the pooled Gram matrix counts as singular.
RANK_RTOL = 1e-10

# sigma_hat below this fraction of the pre-cancellation score magnitude is
# rounding noise (e.g. a perfect fit, or every cluster identical): the
# variance is treated as zero.
DEGENERATE_RTOL = 1e-12


def cluster_gram_blocks(d: ClusteredDataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster X_g'X_g (G,k,k) and X_g'Y_g (G,k)."""
    starts = d.offsets[:-1]
    outer = d.x[:, :, None] * d.x[:, None, :]
    gram = np.add.reduceat(outer, starts, axis=0)
    xty = np.add.reduceat(d.x * d.y[:, None], starts, axis=0)
    return gram, xty


def _solve_gram(gram_bar: np.ndarray) -> np.ndarray:
    """Invert the averaged Gram matrix via SVD with a rank check."""
    u, s, vt = np.linalg.svd(gram_bar)
    if s[-1] <= RANK_RTOL * s[0] or s[0] == 0.0:
        direction = vt[-1]
        raise RankError(
            "pooled Gram matrix is numerically singular; null direction "
            f"{np.array2string(direction, precision=4)}",
            null_direction=direction,
        )
    pi = (vt.T / s) @ u.T
    return (pi + pi.T) / 2.0


@dataclass(frozen=True)
class ClusterFit:
    """OLS fit with the clustered variance pieces used downstream.

    ``gram_blocks`` and ``score_blocks`` hold the per-cluster X_g'X_g and
    X_g'u_hat_g so later stages never re-scan the raw data.
    """

    beta_hat: np.ndarray  # (k,)
    pi: np.ndarray  # (k,k), inverse of the averaged Gram matrix
    resid: np.ndarray  # (N,) stacked residuals
    sigma2_hat: float
    t_stat: float
    hypothesis: Hypothesis
    G: int
    N: int
    gram_blocks: np.ndarray  # (G,k,k)
    xty_blocks: np.ndarray  # (G,k) per-cluster X_g' Y_g
    score_blocks: np.ndarray  # (G,k) per-cluster X_g' u_hat_g
    scores: np.ndarray  # (G,) per-cluster lambda' Pi X_g' u_hat_g

    @property
    def k(self) -> int:
        return int(self.beta_hat.shape[0])

    @property
    def sigma_hat(self) -> float:
        return math.sqrt(self.sigma2_hat)

    @property
    def lambda_beta(self) -> float:
        return float(self.hypothesis.lam @ self.beta_hat)

    def confidence_interval(self, cv: float) -> tuple[float, float]:
        """lambda' beta_hat -/+ cv * sigma_hat / sqrt(G)."""
        half = cv * self.sigma_hat / math.sqrt(self.G)
        est = self.lambda_beta
        return est - half, est + half


def fit(d: ClusteredDataset, h: Hypothesis) -> ClusterFit:
    """Clustered OLS with the robust variance for lambda' beta."""
    if h.lam.shape[0] != d.k:
        raise ValidationError(
            f"hypothesis weight length {h.lam.shape[0]} != regressor count {d.k}"
        )
    gram, xty = cluster_gram_blocks(d)
    gram_bar = np.asarray(gsum(gram)) / d.G
    pi = _solve_gram(gram_bar)
    beta = pi @ (np.asarray(gsum(xty)) / d.G)
    resid = d.y - d.x @ beta
    score_blocks = np.add.reduceat(d.x * resid[:, None], d.offsets[:-1], axis=0)
    pil = pi @ h.lam
    scores = score_blocks @ pil
    sigma2 = float(gsum(scores * scores)) / d.G
    score_scale = float(np.max(np.abs(xty @ pil) + np.abs((gram @ beta) @ pil)))
    if sigma2 <= (DEGENERATE_RTOL * score_scale) ** 2:
        raise DegenerateVarianceError(
            "cluster-robust variance is zero (perfect fit or degenerate scores)"
        )
    t = math.sqrt(d.G) * (float(h.lam @ beta) - h.c0) / math.sqrt(sigma2)
    return ClusterFit(
        beta_hat=beta,
        pi=pi,
        resid=resid,
        sigma2_hat=sigma2,
        t_stat=t,
        hypothesis=h,
        G=d.G,
        N=d.N,
        gram_blocks=gram,
        xty_blocks=xty,
        score_blocks=score_blocks,
        scores=scores,
    )


@dataclass(frozen=True)
class ScoreComponents:
    """Cluster-level variables whose sample means drive the expansion.

    omega1 are the normalized per-cluster scores (their squares average to
    one by construction).  omega2 stacks sigma_hat^{-1} Pi X_g'u_hat_g on
    top of sigma_hat^{-1} X_g'X_g Pi lambda lambda' Pi X_g'u_hat_g.  Gamma
    is the fixed coupling matrix: top-left block
    -(1/G) sum_g X_g'X_g Pi lambda lambda' Pi X_g'X_g, identity blocks off
    the diagonal, zero bottom-right.
    """

    omega1: np.ndarray  # (G,)
    omega2: np.ndarray  # (G, 2k)
    gamma: np.ndarray  # (2k, 2k)

    @property
    def G(self) -> int:
        return int(self.omega1.shape[0])

    @property
    def k(self) -> int:
        return self.omega2.shape[1] // 2


def score_components(fit_: ClusterFit, d: ClusteredDataset | None = None) -> ScoreComponents:
    """Score decomposition evaluated at the estimates."""
    if d is not None and (d.G != fit_.G or d.k != fit_.k):
        raise ValidationError("dataset does not match the supplied fit")
    sig = fit_.sigma_hat
    if not sig > 0.0:
        raise DegenerateVarianceError("score components need sigma_hat > 0")
    k, G = fit_.k, fit_.G
    pil = fit_.pi @ fit_.hypothesis.lam  # Pi lambda
    v = fit_.gram_blocks @ pil  # (G,k): X_g'X_g Pi lambda
    omega1 = fit_.scores / sig
    top = (fit_.score_blocks @ fit_.pi) / sig
    bottom = v * (fit_.scores / sig)[:, None]
    omega2 = np.hstack([top, bottom])
    tl = -np.asarray(gsum(v[:, :, None] * v[:, None, :])) / G
    gamma = np.zeros((2 * k, 2 * k))
    gamma[:k, :k] = tl
    gamma[:k, k:] = np.eye(k)
    gamma[k:, :k] = np.eye(k)
    return ScoreComponents(omega1=omega1, omega2=omega2, gamma=gamma)


def variance_identity_residual(
    d: ClusteredDataset,
    h: Hypothesis,
    beta_true: np.ndarray,
    sigma_g2: np.ndarray,
) -> float:
    """Residual of the variance-ratio identity; used only in tests.

    Left side: sigma_hat / sigma with sigma_hat from the OLS fit and
    sigma^2 the mean of the supplied per-cluster variances.  Right side:
    sqrt(1 - W2' Gamma W2 + W3) built from the population-side variables
    (true errors u_g = Y_g - X_g beta_true and the supplied sigma_g^2).
    Returns +inf if the radicand is negative, which signals an
    inconsistent set of inputs.
    """
    sigma_g2 = np.asarray(sigma_g2, dtype=np.float64)
    if sigma_g2.shape != (d.G,) or np.any(sigma_g2 <= 0):
        raise ValidationError("sigma_g2 must hold one positive value per cluster")
    sigma2 = float(gsum(sigma_g2)) / d.G
    fit_ = fit(d, h)

    beta_true = np.asarray(beta_true, dtype=np.float64)
    u = d.y - d.x @ beta_true
    r = np.add.reduceat(d.x * u[:, None], d.offsets[:-1], axis=0)  # (G,k) X_g'u_g
    pil = fit_.pi @ h.lam
    s = r @ pil  # (G,) lambda' Pi X_g'u_g
    sig = math.sqrt(sigma2)
    v = fit_.gram_blocks @ pil
    omega2 = np.hstack([(r @ fit_.pi) / sig, v * (s / sig)[:, None]])
    omega3 = (s * s - sigma_g2) / sigma2
    k = d.k
    tl = -np.asarray(gsum(v[:, :, None] * v[:, None, :])) / d.G
    gamma = np.zeros((2 * k, 2 * k))
    gamma[:k, :k] = tl
    gamma[:k, k:] = np.eye(k)
    gamma[k:, :k] = np.eye(k)

    w2 = np.asarray(gsum(omega2)) / d.G
    w3 = float(gsum(omega3)) / d.G
    radicand = 1.0 - float(w2 @ gamma @ w2) + w3
    if radicand < 0.0:
        return math.inf
    lhs = fit_.sigma_hat / sig
    return abs(lhs - math.sqrt(radicand))
