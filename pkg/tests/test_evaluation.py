import numpy as np
import pytest

from mammofuse.evaluation import (
    ConfusionMatrix,
    auc,
    auc_ci_bootstrap,
    auc_ci_delong,
    choose_threshold,
    confusion_at_threshold,
    roc_curve,
    summary_metrics,
)

from oracles import auc_paircount


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0

    def test_all_ties(self):
        assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_four_point_example(self):
        # both positives exceed both negatives
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 1, 0, 1]) == 1.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])

    def test_matches_paircount_oracle_with_ties(self):
        rng = np.random.default_rng(100)
        for _ in range(200):
            n = int(rng.integers(2, 50))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            scores = rng.integers(0, 8, size=n) / 7.0  # coarse grid forces ties
            assert auc(scores, labels) == auc_paircount(scores, labels)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(101)
        scores = rng.random(60)
        labels = rng.integers(0, 2, size=60)
        labels[0], labels[1] = 0, 1
        transformed = np.exp(3.0 * scores) + 1.0
        assert auc(scores, labels) == auc(transformed, labels)


class TestRocCurve:
    def test_perfect_step(self):
        points = roc_curve([1.0, 0.0], [1, 0])
        assert [(p[0], p[1]) for p in points] == [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        assert points[0][2] == np.inf

    def test_all_ties_is_diagonal(self):
        points = roc_curve([0.4, 0.4, 0.4], [1, 0, 1])
        assert [(p[0], p[1]) for p in points] == [(0.0, 0.0), (1.0, 1.0)]

    def test_trapezoid_area_equals_mann_whitney(self):
        rng = np.random.default_rng(102)
        for _ in range(50):
            n = int(rng.integers(4, 200))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            scores = np.round(rng.random(n), 2)
            points = roc_curve(scores, labels)
            fpr = np.array([p[0] for p in points])
            tpr = np.array([p[1] for p in points])
            area = float(np.trapezoid(tpr, fpr))
            assert abs(area - auc(scores, labels)) <= 1e-12

    def test_monotone_non_decreasing(self):
        rng = np.random.default_rng(103)
        points = roc_curve(rng.random(50), rng.integers(0, 2, size=50))
        fpr = [p[0] for p in points]
        tpr = [p[1] for p in points]
        assert all(a <= b for a, b in zip(fpr, fpr[1:]))
        assert all(a <= b for a, b in zip(tpr, tpr[1:]))


class TestDelongCi:
    def test_contains_auc_and_clamped(self):
        rng = np.random.default_rng(104)
        scores = np.concatenate([rng.normal(1.0, 1, 80), rng.normal(0, 1, 120)])
        labels = np.array([1] * 80 + [0] * 120)
        lo, hi = auc_ci_delong(scores, labels)
        value = auc(scores, labels)
        assert 0.0 <= lo < value < hi <= 1.0

    def test_duplication_narrows_by_sqrt2(self):
        rng = np.random.default_rng(105)
        scores = np.concatenate([rng.normal(0.8, 1, 75), rng.normal(0, 1, 75)])
        labels = np.array([1] * 75 + [0] * 75)
        lo1, hi1 = auc_ci_delong(scores, labels)
        lo2, hi2 = auc_ci_delong(np.tile(scores, 2), np.tile(labels, 2))
        ratio = (hi1 - lo1) / (hi2 - lo2)
        assert 1.3 <= ratio <= 1.55

    def test_separated_sample_gives_point_interval_with_warning(self):
        with pytest.warns(UserWarning):
            lo, hi = auc_ci_delong([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert (lo, hi) == (1.0, 1.0)

    def test_bootstrap_ci_agrees_roughly(self):
        rng = np.random.default_rng(106)
        scores = np.concatenate([rng.normal(1.2, 1, 100), rng.normal(0, 1, 100)])
        labels = np.array([1] * 100 + [0] * 100)
        d_lo, d_hi = auc_ci_delong(scores, labels)
        b_lo, b_hi = auc_ci_bootstrap(scores, labels, n_boot=500, seed=1)
        assert abs(d_lo - b_lo) < 0.05 and abs(d_hi - b_hi) < 0.05


class TestConfusion:
    def test_published_ensemble_counts(self):
        cm = confusion_at_threshold(
            [0.9] * 287 + [0.9] * 3219 + [0.1] * 82 + [0.1] * 15812,
            [1] * 287 + [0] * 3219 + [1] * 82 + [0] * 15812,
            0.5,
        )
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == (287, 3219, 82, 15812)
        assert cm.total == 19400

    def test_zero_threshold_predicts_all_positive(self):
        cm = confusion_at_threshold([0.0, 0.3, 0.7], [0, 0, 1], 0.0)
        assert cm.fp == 2 and cm.tp == 1 and cm.fn == 0

    def test_above_max_predicts_all_negative(self):
        cm = confusion_at_threshold([0.2, 0.9], [1, 0], 0.9000001)
        assert cm.tp == 0 and cm.fp == 0


class TestSummaryMetrics:
    def test_published_table_metrics(self):
        m = summary_metrics(ConfusionMatrix(tp=287, fp=3219, fn=82, tn=15812))
        assert m.tpr == pytest.approx(0.778, abs=0.0005)
        assert m.tnr == pytest.approx(0.831, abs=0.0005)
        assert m.accuracy == pytest.approx(0.830, abs=0.0005)
        assert m.f1 == pytest.approx(0.148, abs=0.0005)
        assert m.ber == pytest.approx(0.196, abs=0.0005)
        assert not m.undefined

    def test_perfect_classifier(self):
        m = summary_metrics(ConfusionMatrix(tp=1, fp=0, fn=0, tn=1))
        assert (m.tpr, m.tnr, m.accuracy, m.f1, m.ber) == (1.0, 1.0, 1.0, 1.0, 0.0)

    def test_never_positive_classifier(self):
        m = summary_metrics(ConfusionMatrix(tp=0, fp=0, fn=5, tn=7))
        assert m.tpr == 0.0 and m.f1 == 0.0

    def test_undefined_metrics_flagged_not_nan(self):
        m = summary_metrics(ConfusionMatrix(tp=0, fp=0, fn=0, tn=4))
        assert m.tpr is None and "tpr" in m.undefined and "ber" in m.undefined
        assert m.tnr == 1.0


class TestChooseThreshold:
    def test_separated_picks_lowest_positive_score(self):
        assert choose_threshold([0.8, 0.7, 0.2, 0.1], [1, 1, 0, 0]) == 0.7

    def test_all_ties_returns_largest_distinct(self):
        assert choose_threshold([0.3, 0.3, 0.3], [1, 0, 1]) == 0.3

    def test_two_point_toy(self):
        assert choose_threshold([0.9, 0.1], [1, 0]) == 0.9

    def test_maximizes_youden(self):
        scores = [0.9, 0.8, 0.75, 0.4, 0.3, 0.2]
        labels = [1, 1, 0, 1, 0, 0]
        t = choose_threshold(scores, labels)
        def youden(th):
            cm = confusion_at_threshold(scores, labels, th)
            return cm.tp / 3 + cm.tn / 3 - 1
        assert youden(t) == max(youden(th) for th in set(scores))
