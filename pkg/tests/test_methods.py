"""Reference-method tests: Student adjustments and the two bootstraps."""

import math

import numpy as np
import pytest

from clustercrit.data import ClusteredDataset, Hypothesis
from clustercrit.errors import ValidationError
from clustercrit.methods import (
    BootstrapCV,
    evaluate_methods,
    normal_cv,
    order_statistic_index,
    pairs_bootstrap_cv,
    restricted_beta,
    student_cv,
    wild_cluster_bootstrap_cv,
)
from clustercrit.ols import fit
from clustercrit.rng import substream
from conftest import make_dataset, make_hypothesis

# Published design-2 critical values for the d1 column, G = 10..200.
STUDENT_D1_COLUMN = {10: 2.385, 25: 2.106, 50: 2.030, 75: 2.006, 100: 1.994, 200: 1.977}


def test_student_d1_column_mean_design():
    for G, expected in STUDENT_D1_COLUMN.items():
        assert student_cv(G, G, 1, "d1", 0.05) == pytest.approx(expected, abs=1e-3)


def test_student_d2_matches_d1_when_k_is_1():
    for G in (3, 10, 47):
        for N in (G, 3 * G, 211):
            d1 = student_cv(G, N, 1, "d1", 0.05)
            d2 = student_cv(G, N, 1, "d2", 0.05)
            assert d1 == pytest.approx(d2, rel=1e-12)


def test_student_d1_d2_differ_when_k_above_1():
    assert student_cv(10, 10, 2, "d1", 0.05) > student_cv(10, 10, 2, "d2", 0.05)


def test_student_domain_errors():
    with pytest.raises(ValidationError):
        student_cv(10, 10, 10, "d1", 0.05)  # N == k
    with pytest.raises(ValidationError):
        student_cv(10, 10, 1, "d3", 0.05)  # N <= k + G
    with pytest.raises(ValidationError):
        student_cv(10, 39, 1, "dx", 0.05)


def test_order_statistic_rule():
    assert order_statistic_index(999, 0.05) == 950
    assert order_statistic_index(399, 0.05) == 380
    assert order_statistic_index(1, 0.05) == 2  # exceeds B -> sentinel


def test_single_draw_overflows_to_sentinel(rng):
    d = make_dataset(rng, G=5, k=1, min_rows=2, max_rows=3)
    h = Hypothesis(np.array([1.0]), 0.0, 0.05)
    res = pairs_bootstrap_cv(d, h, 1, substream(1, "p"))
    assert math.isinf(res.cv) and res.overflowed and res.flagged


def test_pairs_recentring_at_original_estimate(rng):
    # a resample identical to the original sample gives t* = 0
    from clustercrit import _kernels

    d = make_dataset(rng, G=6, k=2, min_rows=2, max_rows=3)
    h = make_hypothesis(rng, 2)
    f = fit(d, h)
    idx = np.arange(6, dtype=np.int64)[None, :]
    abs_t, _, _ = _kernels.pairs_abs_tstats(
        f.gram_blocks, f.xty_blocks, h.lam, f.lambda_beta, idx
    )
    assert abs_t[0] <= 1e-8


def test_pairs_single_cluster_resample_is_degenerate(rng):
    # one cluster repeated G times is fitted exactly; flagged, never a crash
    from clustercrit import _kernels

    d = make_dataset(rng, G=5, k=1, min_rows=2, max_rows=3)
    h = Hypothesis(np.array([1.0]), 0.0, 0.05)
    f = fit(d, h)
    idx = np.full((1, 5), 2, dtype=np.int64)
    abs_t, _, n_degen = _kernels.pairs_abs_tstats(
        f.gram_blocks, f.xty_blocks, h.lam, f.lambda_beta, idx
    )
    assert math.isinf(abs_t[0]) and n_degen == 1


def test_pairs_pseudo_inverse_on_binary_design():
    # all-untreated resample makes the Gram matrix exactly singular
    from clustercrit import _kernels
    from clustercrit.designs import gen_design3

    d, h = gen_design3(10, substream(5, "binary3", 10, 0))
    f = fit(d, h)
    idx = np.full((1, 10), 9, dtype=np.int64)  # untreated cluster only
    idx = np.vstack([idx, np.arange(10, dtype=np.int64)[None, :]])
    abs_t, n_pinv, n_degen = _kernels.pairs_abs_tstats(
        f.gram_blocks, f.xty_blocks, h.lam, f.lambda_beta, idx
    )
    assert n_pinv >= 1
    assert math.isinf(abs_t[0]) and n_degen >= 1  # tested weight is unidentified
    assert np.isfinite(abs_t[1])


def test_restricted_beta_satisfies_constraint_and_normal_equations(rng):
    d = make_dataset(rng, G=6, k=3, min_rows=2, max_rows=4)
    h = Hypothesis(np.array([1.0, -1.0, 0.5]), 0.7, 0.05)
    f = fit(d, h)
    bt = restricted_beta(d, h, f)
    assert h.lam @ bt == pytest.approx(h.c0, abs=1e-12)
    # stationarity within the constraint set: Z'X'(y - X bt) = 0
    import scipy.linalg

    Z = scipy.linalg.null_space(h.lam[None, :])
    grad = Z.T @ (d.x.T @ (d.y - d.x @ bt))
    assert np.linalg.norm(grad) <= 1e-8 * max(1.0, np.linalg.norm(d.x.T @ d.y))


def test_wcb_null_scores_give_zero(rng):
    from clustercrit import _kernels

    cscore = np.zeros((6, 2))
    signs = substream(2, "s").integers(0, 2, size=(20, 6)).astype(float) * 2 - 1
    abs_t, _, n_degen = _kernels.wcb_abs_tstats(
        np.zeros((6, 2)), np.zeros(6), np.eye(2), cscore, np.array([1.0, 0.0]), signs
    )
    assert np.all(abs_t == 0.0) and n_degen == 20


def test_wcb_rademacher_sign_symmetry(rng):
    d = make_dataset(rng, G=8, k=2, min_rows=1, max_rows=3)
    h = make_hypothesis(rng, 2)
    f = fit(d, h)
    from clustercrit import _kernels

    bt = restricted_beta(d, h, f)
    u = d.y - d.x @ bt
    cscore = np.add.reduceat(d.x * u[:, None], d.offsets[:-1], axis=0)
    a_inv = f.pi / d.G
    w = a_inv @ h.lam
    signs = substream(9, "w").integers(0, 2, size=(64, 8)).astype(float) * 2 - 1
    t1, _, _ = _kernels.wcb_abs_tstats(f.gram_blocks @ w, cscore @ w, a_inv, cscore, h.lam, signs)
    t2, _, _ = _kernels.wcb_abs_tstats(f.gram_blocks @ w, cscore @ w, a_inv, cscore, h.lam, -signs)
    np.testing.assert_allclose(np.sort(t1), np.sort(t2), rtol=1e-12)


def test_bootstrap_cv_seed_stability(rng):
    # two seeds must agree within a distribution-free order-statistic band
    d = make_dataset(rng, G=12, k=1, min_rows=1, max_rows=3)
    h = Hypothesis(np.array([1.0]), 0.0, 0.05)
    f = fit(d, h)
    B = 9999
    r1 = pairs_bootstrap_cv(d, h, B, substream(101, "p"), fit_=f)
    r2 = pairs_bootstrap_cv(d, h, B, substream(202, "p"), fit_=f)
    m = order_statistic_index(B, h.alpha)
    spread = int(math.ceil(3.0 * math.sqrt((B + 1) * 0.05 * 0.95)))
    # recompute run 1's order statistics around the quantile index
    idx = substream(101, "p").integers(0, d.G, size=(B, d.G), dtype=np.int64)
    from clustercrit import _kernels

    t1, _, _ = _kernels.pairs_abs_tstats(f.gram_blocks, f.xty_blocks, h.lam, f.lambda_beta, idx)
    srt = np.sort(t1)
    lo, hi = srt[max(m - 1 - spread, 0)], srt[min(m - 1 + spread, B - 1)]
    assert lo <= r2.cv <= hi
    assert r1.cv == pytest.approx(srt[m - 1])


def test_bootstrap_median_cvs_match_published_design2_values():
    # design 2, G=50, B=999: median bootstrap cv across replications
    from clustercrit.designs import gen_design2

    reps = 401
    pairs_cvs, wcb_cvs = [], []
    for rep in range(reps):
        d, h = gen_design2(50, substream(314, "exp2", 50, rep))
        f = fit(d, h)
        pairs_cvs.append(pairs_bootstrap_cv(d, h, 999, substream(314, "exp2", 50, rep, "pairs"), fit_=f).cv)
        wcb_cvs.append(wild_cluster_bootstrap_cv(d, h, 999, substream(314, "exp2", 50, rep, "wcb"), fit_=f).cv)
    assert np.median(pairs_cvs) == pytest.approx(2.147, abs=0.03)
    assert np.median(wcb_cvs) == pytest.approx(2.006, abs=0.03)


def test_evaluate_methods_consistency(rng):
    d = make_dataset(rng, G=9, k=2, min_rows=1, max_rows=3)
    h = make_hypothesis(rng, 2)
    f = fit(d, h)
    res = evaluate_methods(
        d, h, f,
        ("normal", "student_d1", "student_d2", "pairs", "wcb", "analytic"),
        boot=199,
        boot_rng=lambda m: substream(4, m),
    )
    for r in res.values():
        assert r.reject == (abs(f.t_stat) > r.cv_effective)
        assert r.cv_effective > 0
    assert res["normal"].cv_effective == pytest.approx(normal_cv(h.alpha))
    with pytest.raises(ValidationError):
        evaluate_methods(d, h, f, ("nope",))
    with pytest.raises(ValidationError):
        evaluate_methods(d, h, f, ("pairs",))  # no bootstrap rng supplied


def test_bootstrapcv_flag_logic():
    assert BootstrapCV(1.0, 99, 95, n_degenerate=1).flagged
    assert not BootstrapCV(1.0, 99, 95).flagged


def test_order_statistics_non_decreasing_in_index(rng):
    d = make_dataset(rng, G=10, k=1, min_rows=1, max_rows=3)
    h = Hypothesis(np.array([1.0]), 0.0, 0.05)
    f = fit(d, h)
    from clustercrit import _kernels

    idx = substream(6, "i").integers(0, 10, size=(199, 10), dtype=np.int64)
    t, _, _ = _kernels.pairs_abs_tstats(f.gram_blocks, f.xty_blocks, h.lam, f.lambda_beta, idx)
    srt = np.sort(t)
    assert np.all(np.diff(srt) >= 0)


def test_identical_clusters_fail_at_the_base_fit(rng):
    # every cluster equal means every per-cluster score is exactly zero,
    # so the variance degenerates before any bootstrap can run
    from clustercrit.errors import DegenerateVarianceError

    y1 = rng.normal(size=3)
    x1 = rng.normal(size=(3, 1))
    d = ClusteredDataset(
        np.tile(y1, 4), np.tile(x1, (4, 1)), np.arange(5) * 3, tuple("abcd")
    )
    with pytest.raises(DegenerateVarianceError):
        fit(d, Hypothesis(np.array([1.0]), 0.0, 0.05))
