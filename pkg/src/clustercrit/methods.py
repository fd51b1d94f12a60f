"""Critical values for the comparison methods.

Covers the plain normal critical value, Student t_{G-1} with the d1/d2/d3
small-sample variance adjustments, the pairs percentile-t cluster
bootstrap, and the restricted wild cluster bootstrap with Rademacher
weights.  All bootstrap critical values use the ceil((B+1)(1-alpha))-th
order statistic of |t*|, which is exact under symmetric exchangeability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import ndtri
from scipy.stats import t as student_t

from . import _kernels
from .data import ClusteredDataset, Hypothesis
from .edgeworth import critical_value, moments_from_fit
from .errors import ValidationError
from .ols import ClusterFit, fit

METHODS = ("normal", "student_d1", "student_d2", "student_d3", "pairs", "wcb", "analytic")

# Singular values below PINV_RTOL * s_max are treated as zero when a
# resampled Gram matrix has to be pseudo-inverted.
PINV_RTOL = 1e-10


def normal_cv(alpha: float) -> float:
    """Phi^{-1}(1 - alpha/2)."""
    return float(ndtri(1.0 - alpha / 2.0))


def student_cv(G: int, N: int, k: int, variant: str, alpha: float) -> float:
    """sqrt(d) * t_{G-1, 1-alpha/2} for d in {d1, d2, d3}.

    d1 = (N-1)G / ((N-k)(G-1)), d2 = G/(G-1),
    d3 = (N-1)G / ((N-k-G)(G-1));  d3 counts each cluster fixed effect as
    an extra regressor.  Equivalent to inflating sigma_hat^2 by d and
    comparing |t| with the t_{G-1} quantile.
    """
    if G < 2:
        raise ValidationError("student adjustments need G >= 2")
    if variant == "d1":
        denom = (N - k) * (G - 1)
        numer = (N - 1) * G
    elif variant == "d2":
        denom = G - 1
        numer = G
    elif variant == "d3":
        denom = (N - k - G) * (G - 1)
        numer = (N - 1) * G
    else:
        raise ValidationError(f"unknown student variant {variant!r}")
    if denom <= 0:
        raise ValidationError(
            f"student {variant} adjustment undefined here (G={G}, N={N}, k={k})"
        )
    d = numer / denom
    return math.sqrt(d) * float(student_t.ppf(1.0 - alpha / 2.0, G - 1))


def order_statistic_index(B: int, alpha: float) -> int:
    """ceil((B+1)(1-alpha)), the percentile-t order statistic (1-based)."""
    return math.ceil((B + 1) * (1.0 - alpha))


@dataclass(frozen=True)
class BootstrapCV:
    """Bootstrap critical value plus the flags the draws produced."""

    cv: float
    B: int
    order_index: int
    n_degenerate: int = 0
    n_pinv: int = 0
    overflowed: bool = False  # order statistic index exceeded B

    @property
    def flagged(self) -> bool:
        return self.overflowed or self.n_degenerate > 0


def _order_stat_cv(abs_t: np.ndarray, alpha: float) -> tuple[float, int, bool]:
    B = abs_t.shape[0]
    m = order_statistic_index(B, alpha)
    if m > B:
        return math.inf, m, True
    return float(np.sort(abs_t)[m - 1]), m, False


def pairs_bootstrap_cv(
    d: ClusteredDataset,
    h: Hypothesis,
    B: int,
    rng: np.random.Generator,
    fit_: ClusterFit | None = None,
) -> BootstrapCV:
    """Pairs percentile-t cluster bootstrap critical value.

    Resamples G clusters with replacement, refits, and studentizes
    t* = sqrt(G)(lambda'beta* - lambda'beta_hat)/sigma*.  Singular
    resampled Gram matrices fall back to the pseudo-inverse; a resample
    with zero variance contributes |t*| = +inf (conservative) and is
    counted in the flags.
    """
    if B < 1:
        raise ValidationError("need at least one bootstrap draw")
    if fit_ is None:
        fit_ = fit(d, h)
    idx = rng.integers(0, d.G, size=(B, d.G), dtype=np.int64)
    abs_t, n_pinv, n_degen = _kernels.pairs_abs_tstats(
        fit_.gram_blocks, fit_.xty_blocks, h.lam, fit_.lambda_beta, idx, PINV_RTOL
    )
    cv, m, overflow = _order_stat_cv(abs_t, h.alpha)
    return BootstrapCV(cv, B, m, n_degenerate=n_degen, n_pinv=n_pinv, overflowed=overflow)


def restricted_beta(d: ClusteredDataset, h: Hypothesis, fit_: ClusterFit) -> np.ndarray:
    """Least squares subject to lambda' beta = c0.

    Solved in the null space of lambda' (numerically stabler than
    Lagrange multipliers when dummies are nearly collinear).
    """
    lam = h.lam
    beta0 = h.c0 * lam / float(lam @ lam)
    if d.k == 1:
        return beta0
    Z = scipy.linalg.null_space(lam[None, :])  # (k, k-1)
    A = np.asarray(fit_.gram_blocks.sum(axis=0))
    b = fit_.xty_blocks.sum(axis=0)
    gamma = np.linalg.solve(Z.T @ A @ Z, Z.T @ (b - A @ beta0))
    return beta0 + Z @ gamma


def wild_cluster_bootstrap_cv(
    d: ClusteredDataset,
    h: Hypothesis,
    B: int,
    rng: np.random.Generator,
    fit_: ClusterFit | None = None,
) -> BootstrapCV:
    """Restricted wild cluster bootstrap critical value.

    Residuals from the null-imposed fit are flipped by per-cluster
    Rademacher signs, outcomes rebuilt, and the unrestricted t* computed
    against c0 with the usual variance formula.  All-zero scores in a draw
    give |t*| = 0 (the regenerated data are literally null).
    """
    if B < 1:
        raise ValidationError("need at least one bootstrap draw")
    if fit_ is None:
        fit_ = fit(d, h)
    beta_t = restricted_beta(d, h, fit_)
    u_tilde = d.y - d.x @ beta_t
    cscore = np.add.reduceat(d.x * u_tilde[:, None], d.offsets[:-1], axis=0)
    a_inv = fit_.pi / d.G  # inverse of the pooled (unaveraged) Gram matrix
    w = a_inv @ h.lam
    proj = fit_.gram_blocks @ w
    dscore = cscore @ w
    signs = rng.integers(0, 2, size=(B, d.G)).astype(np.float64) * 2.0 - 1.0
    abs_t, _, n_degen = _kernels.wcb_abs_tstats(proj, dscore, a_inv, cscore, h.lam, signs)
    cv, m, overflow = _order_stat_cv(abs_t, h.alpha)
    return BootstrapCV(cv, B, m, n_degenerate=n_degen, overflowed=overflow)


@dataclass(frozen=True)
class MethodResult:
    """One method's critical value and decision for a given fit."""

    method: str
    cv_effective: float
    reject: bool
    meta: dict = field(default_factory=dict)


def evaluate_methods(
    d: ClusteredDataset,
    h: Hypothesis,
    fit_: ClusterFit,
    methods: tuple[str, ...],
    boot: int = 999,
    boot_rng=None,
    truncation: float | None = None,
) -> dict[str, MethodResult]:
    """Critical value and decision for each requested method on one fit.

    `boot_rng` maps a method name to a fresh seeded generator; required
    when a bootstrap method is requested.
    """
    out: dict[str, MethodResult] = {}
    abs_t = abs(fit_.t_stat)
    for method in methods:
        meta: dict = {}
        if method == "normal":
            cv = normal_cv(h.alpha)
        elif method.startswith("student_"):
            cv = student_cv(fit_.G, fit_.N, fit_.k, method.removeprefix("student_"), h.alpha)
        elif method == "analytic":
            moments = moments_from_fit(fit_, truncation=truncation)
            cc = critical_value(moments, fit_.G, h.alpha, fit_=fit_)
            cv = cc.cv
            meta = {
                "kcum": moments.kcum,
                "q2_at_z0": cc.q2_at_z0,
                "z0": cc.z0,
                "cv_negative": cc.cv_negative,
                "k2_negative": cc.k2_negative,
            }
        elif method in ("pairs", "wcb"):
            if boot_rng is None:
                raise ValidationError(f"method {method!r} needs a bootstrap RNG")
            func = pairs_bootstrap_cv if method == "pairs" else wild_cluster_bootstrap_cv
            res = func(d, h, boot, boot_rng(method), fit_=fit_)
            cv = res.cv
            meta = {
                "B": res.B,
                "n_degenerate": res.n_degenerate,
                "n_pinv": res.n_pinv,
                "overflowed": res.overflowed,
            }
        else:
            raise ValidationError(f"unknown method {method!r}; choose from {METHODS}")
        out[method] = MethodResult(method, cv, abs_t > cv, meta)
    return out
