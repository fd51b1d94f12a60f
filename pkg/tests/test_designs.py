"""Simulated-design generator tests."""

import math

import numpy as np
import pytest

from clustercrit.data import ClusteredDataset
from clustercrit.designs import (
    DesignSpec,
    design4_cluster_sizes,
    gen_design1,
    gen_design2,
    gen_design3,
    gen_design4,
    generate,
    load_state_year_panel,
)
from clustercrit.errors import ValidationError
from clustercrit.ols import fit
from clustercrit.rng import substream
from conftest_design1 import panel_to_csv, synthetic_panel


def test_design2_shape():
    d, h = gen_design2(10, substream(0, "exp2", 10, 0))
    assert d.G == 10 and d.N == 10 and d.k == 1
    assert np.all(d.x == 1.0)
    assert h.c0 == 0.0 and tuple(h.lam) == (1.0,)


def test_design2_moment_oracle():
    # mean 0, variance 1, skewness 2 on a million draws, within 3 SE
    n = 10**6
    y = gen_design2(n, substream(8, "exp2", n, 0))[0].y
    assert abs(y.mean()) <= 3.0 / math.sqrt(n)  # sd = 1
    assert abs(y.var() - 1.0) <= 3.0 * math.sqrt(8.0 / n)  # var of squared exp
    skew = (y**3).mean()
    se_skew = (y**6).std() / math.sqrt(n)  # crude but adequate
    assert abs(skew - 2.0) <= 3.0 * max(se_skew, (265 - 4) ** 0.5 / math.sqrt(n))


def test_design3_construction():
    d, h = gen_design3(10, substream(0, "binary3", 10, 0))
    assert d.G == 10 and d.k == 2
    assert d.x[:, 1].sum() == 5  # exactly half the clusters treated
    assert np.all(d.x[:5, 1] == 1.0) and np.all(d.x[5:, 1] == 0.0)
    assert tuple(h.lam) == (0.0, 1.0) and h.c0 == 0.0


def test_design3_odd_G_treats_first_floor_half():
    d, _ = gen_design3(25, substream(0, "binary3", 25, 0))
    assert d.x[:, 1].sum() == 12  # floor(25/2) clusters on the treated arm
    assert np.all(d.x[:12, 1] == 1.0) and np.all(d.x[12:, 1] == 0.0)


def test_design3_sample_skewness_matches_published_scale():
    # estimated third score moment at G = 10^4 is close to 2.00
    from clustercrit.edgeworth import moments_from_fit

    G = 10_000
    d, h = gen_design3(G, substream(21, "binary3", G, 0))
    m = moments_from_fit(fit(d, h))
    assert m.mu111 == pytest.approx(2.00, abs=0.1)


def test_design4_sizes_at_G10_oracle():
    # independent evaluation of the size rule at G=10: weights
    # 2G exp(g/G)/sum exp(l/G), nearest-integer bracket, plus 2
    w = [20 * math.exp(g / 10) / sum(math.exp(l / 10) for l in range(1, 11)) for g in range(1, 11)]
    expected = [2 + math.floor(v + 0.5) for v in w]
    assert expected == [3, 3, 3, 4, 4, 4, 4, 4, 5, 5]
    np.testing.assert_array_equal(design4_cluster_sizes(10), expected)
    assert design4_cluster_sizes(10).sum() == 39


def test_design4_sizes_reproduce_published_d3_column():
    # nearest-integer rounding is pinned down by the d3-adjusted critical
    # values: floor would give 2.821 at G=10 instead of 2.778
    from clustercrit.methods import student_cv

    published = {10: 2.778, 25: 2.436, 50: 2.348, 75: 2.319, 100: 2.305, 200: 2.285}
    for G, expected in published.items():
        N = int(design4_cluster_sizes(G).sum())
        assert student_cv(G, N, 1, "d3", 0.05) == pytest.approx(expected, abs=1e-3)


def test_design4_every_cluster_has_at_least_two_rows():
    for G in (2, 10, 57, 200):
        assert design4_cluster_sizes(G).min() >= 2


def test_design4_size_total_near_2G():
    # pre-bracket weights sum to exactly 2G; rounding moves each term by
    # at most 1/2
    for G in (5, 10, 40, 111):
        total = (design4_cluster_sizes(G) - 2).sum() - 2 * G
        assert abs(total) <= G / 2 + 1


def test_design4_regressor_rule():
    d, _ = gen_design4(10, substream(1, "fe4", 10, 0))
    sizes = design4_cluster_sizes(10)
    N = sizes.sum()
    j = np.arange(1, N + 1)
    raw = ((j < N / 2) & (j % 2 == 1)).astype(float)
    # recover the raw column by undoing the demeaning cluster by cluster
    rep = np.repeat(np.arange(10), sizes)
    means = np.array([raw[rep == g].mean() for g in range(10)])
    np.testing.assert_allclose(d.x[:, 0], raw - means[rep], atol=1e-12)


def test_design4_outcome_is_transformed_and_fittable():
    d, h = gen_design4(10, substream(2, "fe4", 10, 0))
    f = fit(d, h)  # must not raise despite untreated later clusters
    assert d.k == 1 and np.isfinite(f.t_stat)
    for b in d.blocks():
        assert abs(b.y.mean()) <= 1e-12 * max(1.0, np.abs(b.y).max())


def test_design1_shapes_and_placebo():
    panel = synthetic_panel()
    d, h = gen_design1(panel, 10, substream(3, "bdm1", 10, 0))
    assert d.G == 10 and d.N == 210 and d.k == 31
    policy = d.x[:, 1]
    assert set(np.unique(policy)) <= {0.0, 1.0}
    assert 0 < policy.sum() < d.N  # some treated, some not
    # treated clusters: exactly half
    treated_clusters = sum(1 for b in d.blocks() if b.x[:, 1].any())
    assert treated_clusters == 5
    # policy is zero up to the change year within every treated cluster
    for b in d.blocks():
        if b.x[:, 1].any():
            first = np.argmax(b.x[:, 1] > 0)
            assert np.all(b.x[:first, 1] == 0) and np.all(b.x[first:, 1] == 1)
    f = fit(d, h)
    assert np.isfinite(f.t_stat)


def test_design1_policy_year_in_window():
    panel = synthetic_panel()
    years = np.asarray(panel.years)
    for rep in range(12):
        d, _ = gen_design1(panel, 4, substream(17, "bdm1", 4, rep))
        for b in d.blocks():
            if b.x[:, 1].any():
                change_year = years[np.argmax(b.x[:, 1] > 0)]
                assert 1985 <= change_year <= 1994  # treated strictly after T


def test_design1_requires_panel_and_enough_draws():
    panel = synthetic_panel()
    with pytest.raises(ValidationError, match="panel"):
        gen_design1(None, 10, substream(0, "x"))
    with pytest.raises(ValidationError):
        gen_design1(panel, 2, substream(0, "x"))
    d, _ = gen_design1(panel, 9, substream(0, "bdm1", 9, 0))
    treated = sum(1 for b in d.blocks() if b.x[:, 1].any())
    assert treated == 4  # floor(9/2) treated draws at odd G


def test_design1_within_state_fit_is_equivalent():
    # state-draw dummies and within-demeaning give the same policy
    # t-statistic because the demeaning groups are the clusters
    from clustercrit.data import within_transform

    panel = synthetic_panel()
    d, h = gen_design1(panel, 8, substream(6, "bdm1", 8, 0))
    f = fit(d, h)
    keep = np.r_[1, np.arange(2, 2 + 20)]  # policy + year dummies
    slim = ClusteredDataset(d.y, d.x[:, keep], d.offsets, d.labels)
    sw = within_transform(slim)
    lam = np.zeros(21)
    lam[0] = 1.0
    f2 = fit(sw, type(h)(lam, h.c0, h.alpha))
    assert f2.t_stat == pytest.approx(f.t_stat, rel=1e-8)
    assert f2.sigma2_hat == pytest.approx(f.sigma2_hat, rel=1e-8)


def test_panel_loader_errors(tmp_path):
    panel = synthetic_panel()
    p = tmp_path / "panel.csv"
    panel_to_csv(panel, p)
    loaded = load_state_year_panel(p)
    assert loaded.n_states == 50
    np.testing.assert_allclose(loaded.outcome, panel.outcome)

    small = synthetic_panel(n_states=49)
    p2 = tmp_path / "small.csv"
    panel_to_csv(small, p2)
    with pytest.raises(ValidationError, match="49 states"):
        load_state_year_panel(p2)

    lines = p.read_text().splitlines()
    drop = [ln for ln in lines if not ln.startswith("st07,1984")]
    p3 = tmp_path / "gap.csv"
    p3.write_text("\n".join(drop) + "\n")
    with pytest.raises(ValidationError, match="missing year 1984"):
        load_state_year_panel(p3)


def test_generate_dispatch_and_designspec():
    d, _ = generate("exp2", 6, substream(0, "exp2", 6, 0))
    assert d.G == 6
    with pytest.raises(ValidationError):
        generate("nope", 6, substream(0, "z"))
    with pytest.raises(ValidationError):
        DesignSpec("bdm1", 10)  # panel required
    spec = DesignSpec("exp2", 10)
    assert spec.G == 10


def test_same_substream_reproduces_dataset():
    a, _ = gen_design4(12, substream(9, "fe4", 12, 3))
    b, _ = gen_design4(12, substream(9, "fe4", 12, 3))
    assert a.equals(b)
