"""Moment estimation, cumulants, and the corrected critical value.

The null CDF of the absolute t-statistic admits the two-sided expansion
2 Phi(z) - 1 + 2 G^{-1} q2(z) phi(z), where q2 is a cubic/quintic Hermite
combination of four approximate cumulants of the statistic.  Inverting the
expansion at z0 = Phi^{-1}(1 - alpha/2) yields the corrected critical
value z0 - G^{-1} q2_hat(z0); the cumulants come from sample moments of
the per-cluster score components.

Phi^{-1} is scipy.special.ndtri (the Cephes rational approximation, whose
absolute error is far below 1e-9), so tabulated values reproduce to at
least six digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from ._accum import gsum
from .errors import ValidationError
from .ols import ClusterFit, ScoreComponents

_SQRT2PI = math.sqrt(2.0 * math.pi)


def hermite(r: int, z):
    """Probabilists' Hermite polynomial of order r in {1, 2, 3, 5}."""
    if r == 1:
        return z
    if r == 2:
        return z * z - 1.0
    if r == 3:
        return z * z * z - 3.0 * z
    if r == 5:
        z3 = z * z * z
        return z3 * z * z - 10.0 * z3 + 15.0 * z
    raise ValidationError(f"unsupported Hermite order {r}; need one of 1, 2, 3, 5")


def _phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / _SQRT2PI


def _Phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def cumulants_from_moments(
    mu12: np.ndarray, mu22: float, mu111: float, mu1111: float, gamma: np.ndarray
) -> tuple[tuple[float, float, float, float], tuple[float, float, float, float]]:
    """Map the four score moments to (nu1..nu4) and (k1..k4)."""
    quad = float(mu12 @ gamma @ mu12)
    nu1 = -mu111 / 2.0
    nu2 = 2.0 * mu111 * mu111 + (mu22 + 2.0 * quad)
    nu3 = -3.5 * mu111
    nu4 = -2.0 * mu1111 + 28.0 * mu111 * mu111 + 6.0 * mu22 + 24.0 * quad
    k1 = nu1
    k2 = nu2 - nu1 * nu1
    k3 = nu3 - 3.0 * nu1
    k4 = nu4 - 4.0 * nu1 * nu3 - 6.0 * nu2 + 12.0 * nu1 * nu1
    return (nu1, nu2, nu3, nu4), (k1, k2, k3, k4)


@dataclass(frozen=True)
class EdgeworthMoments:
    """Sample moments of the score components and derived cumulants.

    k2 can be negative in small samples; it is reported raw, never clamped.
    ``truncation`` records the clamp threshold when truncated means were
    requested, else None.
    """

    mu12: np.ndarray  # (2k,)
    mu22: float
    mu111: float
    mu1111: float
    gamma: np.ndarray  # (2k, 2k)
    nu: tuple[float, float, float, float]
    kcum: tuple[float, float, float, float]
    truncation: float | None = None


def estimate_moments(sc: ScoreComponents, truncation: float | None = None) -> EdgeworthMoments:
    """Sample analogs of the four moments, optionally with truncated means.

    With a threshold tau, every per-cluster summand with |value| > tau is
    replaced by sign * tau (componentwise for the vector moment) before
    averaging.  Truncation is off unless a threshold is supplied.
    """
    if sc.G < 2:
        raise ValidationError("moment estimation needs G >= 2")
    if truncation is not None and not truncation > 0:
        raise ValidationError("truncation threshold must be positive")
    o1, o2, gamma = sc.omega1, sc.omega2, sc.gamma
    m12_g = o1[:, None] * o2
    m22_g = np.einsum("gi,ij,gj->g", o2, gamma, o2)
    m111_g = o1**3
    m1111_g = o1**4
    if truncation is not None:
        t = truncation
        m12_g = np.clip(m12_g, -t, t)
        m22_g = np.clip(m22_g, -t, t)
        m111_g = np.clip(m111_g, -t, t)
        m1111_g = np.clip(m1111_g, -t, t)
    G = sc.G
    mu12 = np.asarray(gsum(m12_g)) / G
    mu22 = float(gsum(m22_g)) / G
    mu111 = float(gsum(m111_g)) / G
    mu1111 = float(gsum(m1111_g)) / G
    nu, kcum = cumulants_from_moments(mu12, mu22, mu111, mu1111, gamma)
    return EdgeworthMoments(
        mu12=mu12,
        mu22=mu22,
        mu111=mu111,
        mu1111=mu1111,
        gamma=gamma,
        nu=nu,
        kcum=kcum,
        truncation=truncation,
    )


def moments_from_fit(fit_: ClusterFit, truncation: float | None = None) -> EdgeworthMoments:
    """Convenience: score components then moment estimation."""
    from .ols import score_components

    return estimate_moments(score_components(fit_), truncation=truncation)


def q2_from_cumulants(z, k1: float, k2: float, k3: float, k4: float):
    """Second-order expansion polynomial at cumulants (k1..k4)."""
    return -(
        0.5 * (k2 + k1 * k1) * hermite(1, z)
        + (k4 + 4.0 * k1 * k3) / 24.0 * hermite(3, z)
        + k3 * k3 / 72.0 * hermite(5, z)
    )


def q1_from_cumulants(z, k1: float, k3: float):
    """First-order expansion polynomial (one-sided diagnostic)."""
    return -(k1 + k3 / 6.0 * hermite(2, z))


def q2(z, m: EdgeworthMoments):
    return q2_from_cumulants(z, *m.kcum)


def q1(z, m: EdgeworthMoments):
    k1, _, k3, _ = m.kcum
    return q1_from_cumulants(z, k1, k3)


@dataclass(frozen=True)
class CorrectedCritical:
    """Corrected critical value and, when a fit is attached, its CI."""

    z0: float
    q2_at_z0: float
    cv: float
    ci_lo: float | None = None
    ci_hi: float | None = None
    cv_negative: bool = False
    k2_negative: bool = False


def critical_value(
    m: EdgeworthMoments, G: int, alpha: float, fit_: ClusterFit | None = None
) -> CorrectedCritical:
    """z0 - q2_hat(z0)/G, reported raw (no clamping) with diagnostics.

    With a fit attached, fills the confidence interval
    lambda' beta_hat -/+ cv sigma_hat / sqrt(G).
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0,1), got {alpha}")
    if G < 2:
        raise ValidationError("need G >= 2")
    z0 = float(ndtri(1.0 - alpha / 2.0))
    q2z = float(q2(z0, m))
    cv = z0 - q2z / G
    ci_lo = ci_hi = None
    if fit_ is not None:
        ci_lo, ci_hi = fit_.confidence_interval(cv)
    return CorrectedCritical(
        z0=z0,
        q2_at_z0=q2z,
        cv=cv,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        cv_negative=cv < 0.0,
        k2_negative=m.kcum[1] < 0.0,
    )


@dataclass(frozen=True)
class ExpansionCdf:
    """Expansion approximations to the null CDF at a point.

    ``two_sided`` approximates P(|t| <= z); ``one_sided`` approximates
    P(t <= z).  Values are reported raw; ``out_of_range`` flags any value
    outside [0, 1].
    """

    two_sided: float
    one_sided: float
    out_of_range: bool


def edgeworth_cdf(z: float, m: EdgeworthMoments, G: int) -> ExpansionCdf:
    """Two-sided and one-sided expansion CDFs at z (diagnostic)."""
    if G < 2:
        raise ValidationError("need G >= 2")
    z = float(z)
    phi = _phi(z)
    q2z = float(q2(z, m))
    q1z = float(q1(z, m))
    two = 2.0 * _Phi(z) - 1.0 + 2.0 * q2z * phi / G
    one = _Phi(z) + q1z * phi / math.sqrt(G) + q2z * phi / G
    bad = not (0.0 <= two <= 1.0 and 0.0 <= one <= 1.0)
    return ExpansionCdf(two_sided=two, one_sided=one, out_of_range=bad)
