"""The four simulated designs of the size study.

All outcomes are generated under the null, so rejection rates estimate
test size.  Skewed errors come from the demeaned unit-variance
exponential; its third central moment is 2, which is what separates the
methods at small G.

bdm1    state-year placebo-policy panel resampled from a supplied outcome
        panel; policy, year, and state-draw dummies.
exp2    N_g = 1, intercept only, skewed errors: inference on a mean.
binary3 N_g = 1, intercept plus a half-half binary regressor whose value
        flips the sign of the skewed error.
fe4     unequal cluster sizes, cluster fixed effects removed by the
        within transformation, binary regressor, skewed errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ClusteredDataset, Hypothesis, add_dummies, read_table, within_transform
from .errors import DesignError, ParseError, ValidationError
from .rng import demeaned_exponential

DESIGNS = ("bdm1", "exp2", "binary3", "fe4")

BDM_YEARS = tuple(range(1979, 2000))
BDM_POLICY_YEARS = tuple(range(1984, 1994))
BDM_MIN_STATES = 50


@dataclass(frozen=True)
class DesignSpec:
    """A (design, G) cell of the simulation grid."""

    design: str
    G: int
    panel: "StateYearPanel | None" = None

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValidationError(f"unknown design {self.design!r}; choose from {DESIGNS}")
        if self.design == "bdm1" and self.panel is None:
            raise ValidationError("design bdm1 requires an attached state-year panel")


@dataclass(frozen=True)
class StateYearPanel:
    """Balanced state-by-year outcome panel for the bdm1 design."""

    states: tuple[str, ...]
    years: tuple[int, ...]
    outcome: np.ndarray  # (n_states, n_years)

    @property
    def n_states(self) -> int:
        return len(self.states)


def load_state_year_panel(
    path,
    state_col: str = "state",
    year_col: str = "year",
    y_col: str = "lnwage",
    delimiter: str = ",",
) -> StateYearPanel:
    """Load a long-format (state, year, outcome) file into a balanced panel.

    Requires at least 50 states, each observed in every year 1979-1999;
    rows outside that year window are ignored.
    """
    header, rows = read_table(path, delimiter)
    try:
        si = header.index(state_col)
        yi = header.index(year_col)
        vi = header.index(y_col)
    except ValueError as exc:
        raise ParseError(f"{path}: missing panel column ({exc})") from None
    cells: dict[str, dict[int, float]] = {}
    for r, row in enumerate(rows, start=1):
        state = row[si].strip()
        if not state:
            raise ParseError(f"{path}: row {r} has a blank state cell")
        try:
            year = int(float(row[yi]))
            val = float(row[vi])
        except ValueError:
            raise ParseError(f"{path}: row {r}: non-numeric year or outcome") from None
        if year in BDM_YEARS:
            cells.setdefault(state, {})[year] = val
    states = tuple(sorted(cells))
    if len(states) < BDM_MIN_STATES:
        raise ValidationError(
            f"{path}: panel has {len(states)} states; need at least {BDM_MIN_STATES}"
        )
    out = np.empty((len(states), len(BDM_YEARS)))
    for i, st in enumerate(states):
        for j, year in enumerate(BDM_YEARS):
            if year not in cells[st]:
                raise ValidationError(f"{path}: state {st!r} is missing year {year}")
            out[i, j] = cells[st][year]
    return StateYearPanel(states=states, years=BDM_YEARS, outcome=out)


def gen_design2(G: int, rng: np.random.Generator, alpha: float = 0.05):
    """Skewed-error mean design: N_g = 1, X = 1, Y demeaned exponential."""
    if G < 2:
        raise ValidationError("need G >= 2")
    y = demeaned_exponential(rng, G)
    x = np.ones((G, 1))
    d = ClusteredDataset(y, x, np.arange(G + 1), tuple(str(g) for g in range(G)))
    return d, Hypothesis(np.array([1.0]), 0.0, alpha)


def gen_design3(G: int, rng: np.random.Generator, alpha: float = 0.05):
    """Binary-regressor design with sign-flipped skewed errors.

    The first half of the clusters carry the binary regressor; at odd G
    that is the first floor(G/2) of them (the reported tables include
    G = 25 and G = 75 rows).
    """
    if G < 3:
        raise ValidationError("need G >= 3 (at least one cluster on each arm)")
    x = np.ones((G, 2))
    x[G // 2 :, 1] = 0.0
    u = demeaned_exponential(rng, G)
    y = (2.0 * x[:, 1] - 1.0) * u
    d = ClusteredDataset(y, x, np.arange(G + 1), tuple(str(g) for g in range(G)))
    return d, Hypothesis(np.array([0.0, 1.0]), 0.0, alpha)


def design4_cluster_sizes(G: int) -> np.ndarray:
    """N_g = 2 + [2G exp(g/G) / sum_l exp(l/G)], nearest-integer bracket.

    The bracket rounds to the nearest integer (round-half-up); the
    reported d3-adjusted critical values pin this convention down.
    """
    g = np.arange(1, G + 1)
    w = 2.0 * G * np.exp(g / G) / np.exp(g / G).sum()
    return (2 + np.floor(w + 0.5)).astype(np.int64)


def gen_design4(G: int, rng: np.random.Generator, alpha: float = 0.05):
    """Fixed-effects design: uneven clusters, binary regressor, skewed errors.

    Outcomes include a Uniform(0.5, 1) cluster effect that the within
    transformation removes; the returned dataset is already transformed.
    The regressor is 1 exactly on odd stacked indices in the first half of
    the sample, so later clusters have no treated rows; only a total loss
    of within-cluster variation (which the construction rules out) raises.
    """
    if G < 2:
        raise ValidationError("need G >= 2")
    sizes = design4_cluster_sizes(G)
    N = int(sizes.sum())
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    j = np.arange(1, N + 1)
    x = ((j < N / 2) & (j % 2 == 1)).astype(np.float64)[:, None]
    eps = rng.uniform(0.5, 1.0, G)
    xi = demeaned_exponential(rng, N)
    rep = np.repeat(np.arange(G), sizes)
    y = eps[rep] + (2.0 * x[:, 0] - 1.0) * xi
    d = ClusteredDataset(y, x, offsets, tuple(str(g) for g in range(G)))
    dt = within_transform(d)
    if not np.any(dt.x != 0.0):
        raise DesignError(
            "fe4 integrity violation: regressor has no within-cluster variation"
        )
    return dt, Hypothesis(np.array([1.0]), 0.0, alpha)


def gen_design1(
    panel: StateYearPanel, G: int, rng: np.random.Generator, alpha: float = 0.05
):
    """Placebo-policy panel design resampled from a state-year panel.

    Samples G states with replacement (each draw becomes its own
    cluster), picks a policy start year uniformly from 1984-1993, treats
    a random half of the draws after that year (floor(G/2) at odd G, as
    in the reported G = 25 and G = 75 rows), and regresses the outcome
    on an intercept, the policy dummy, year dummies, and draw dummies.
    The policy coefficient is zero in the population by construction.
    """
    if panel is None:
        raise ValidationError("design bdm1 requires a panel")
    if G < 3:
        raise ValidationError("need G >= 3 (at least one treated and one untreated draw)")
    n_years = len(panel.years)
    draws = rng.integers(0, panel.n_states, size=G)
    policy_year = int(BDM_POLICY_YEARS[0] + rng.integers(0, len(BDM_POLICY_YEARS)))
    treated = np.zeros(G, dtype=bool)
    treated[rng.permutation(G)[: G // 2]] = True

    years = np.tile(np.asarray(panel.years), G)
    draw_labels = np.repeat(np.arange(G), n_years)
    y = panel.outcome[draws].reshape(-1)
    policy = (np.repeat(treated, n_years) & (years > policy_year)).astype(np.float64)
    x = np.column_stack([np.ones(y.shape[0]), policy])
    offsets = np.arange(G + 1) * n_years
    d = ClusteredDataset(y, x, offsets, tuple(str(g) for g in range(G)))
    d = add_dummies(d, years).dataset
    d = add_dummies(d, draw_labels).dataset
    lam = np.zeros(d.k)
    lam[1] = 1.0  # the policy column
    return d, Hypothesis(lam, 0.0, alpha)


def generate(
    design: str,
    G: int,
    rng: np.random.Generator,
    alpha: float = 0.05,
    panel: StateYearPanel | None = None,
):
    """Dispatch to the design generators."""
    if design == "exp2":
        return gen_design2(G, rng, alpha)
    if design == "binary3":
        return gen_design3(G, rng, alpha)
    if design == "fe4":
        return gen_design4(G, rng, alpha)
    if design == "bdm1":
        return gen_design1(panel, G, rng, alpha)
    raise ValidationError(f"unknown design {design!r}; choose from {DESIGNS}")
