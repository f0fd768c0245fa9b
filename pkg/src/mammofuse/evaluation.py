"""ROC analysis, AUC confidence intervals and confusion-matrix metrics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


def _validate_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if scores.size != labels.size:
        raise ValueError("scores and labels must have equal length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return scores, labels


def _require_two_classes(labels: np.ndarray) -> None:
    if labels.size == 0 or labels.min() == labels.max():
        raise ValueError("both classes must be present")


def _midranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing their mean rank."""
    order = np.argsort(x, kind="stable")
    z = x[order]
    n = x.size
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j < n and z[j] == z[i]:
            j += 1
        ranks[i:j] = 0.5 * (i + j - 1) + 1.0
        i = j
    out = np.empty(n, dtype=np.float64)
    out[order] = ranks
    return out


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score+ > score-) + half the tie probability."""
    scores, labels = _validate_scores_labels(scores, labels)
    _require_two_classes(labels)
    ranks = _midranks(scores)
    m = int(labels.sum())
    n = labels.size - m
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - m * (m + 1) / 2.0) / (m * n)


def auc_ci_delong(scores, labels) -> tuple[float, float]:
    """95% CI from the DeLong structural-components variance estimate.

    A degenerate zero-variance case with AUC at 0 or 1 collapses to a
    point interval and emits a warning.
    """
    scores, labels = _validate_scores_labels(scores, labels)
    _require_two_classes(labels)
    m = int(labels.sum())
    n = labels.size - m
    if m < 2 or n < 2:
        raise ValueError("need at least 2 observations per class")

    pos = scores[labels == 1]
    neg = scores[labels == 0]
    tx = _midranks(pos)
    ty = _midranks(neg)
    tz = _midranks(np.concatenate([pos, neg]))

    v01 = (tz[:m] - tx) / n
    v10 = (tz[m:] - ty) / m
    value = float(np.mean(v01))
    var = float(np.var(v01, ddof=1) / m + np.var(v10, ddof=1) / n)

    if var <= 0.0:
        if value in (0.0, 1.0):
            warnings.warn("degenerate AUC variance; returning a point interval")
            return value, value
        var = 0.0
    half = Z_95 * np.sqrt(var)
    return max(0.0, value - half), min(1.0, value + half)


def auc_ci_bootstrap(scores, labels, n_boot: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap CI; resamples that lose a class are skipped."""
    scores, labels = _validate_scores_labels(scores, labels)
    _require_two_classes(labels)
    rng = np.random.default_rng(seed)
    n = scores.size
    values = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, size=n)
        lab = labels[idx]
        if lab.min() == lab.max():
            continue
        values.append(auc(scores[idx], lab))
    if not values:
        raise ValueError("no valid bootstrap resample contained both classes")
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


def roc_curve(scores, labels) -> list[tuple[float, float, float]]:
    """ROC points as (fpr, tpr, threshold) with prediction rule score >= t.

    Thresholds run over each distinct score in descending order after an
    infinite sentinel, so the curve starts at (0, 0) and ends at (1, 1);
    its trapezoidal area equals the Mann-Whitney AUC.
    """
    scores, labels = _validate_scores_labels(scores, labels)
    _require_two_classes(labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    distinct = np.flatnonzero(np.diff(s) != 0)
    last_of_group = np.concatenate([distinct, [s.size - 1]])
    tp = np.cumsum(y)[last_of_group]
    fp = (last_of_group + 1) - tp
    total_pos = int(labels.sum())
    total_neg = labels.size - total_pos
    points = [(0.0, 0.0, np.inf)]
    for i, gi in enumerate(last_of_group):
        points.append((fp[i] / total_neg, tp[i] / total_pos, float(s[gi])))
    return points


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion_at_threshold(scores, labels, threshold: float) -> ConfusionMatrix:
    """Counts with predicted-positive defined as score >= threshold."""
    scores, labels = _validate_scores_labels(scores, labels)
    predicted = scores >= threshold
    actual = labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
        tn=int(np.sum(~predicted & ~actual)),
    )


@dataclass(frozen=True)
class MetricsSummary:
    """Summary metrics; entries whose denominator vanishes are None and
    listed in ``undefined`` rather than silently NaN."""

    tpr: float | None
    tnr: float | None
    accuracy: float | None
    f1: float | None
    ber: float | None
    undefined: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "tpr": self.tpr,
            "tnr": self.tnr,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "ber": self.ber,
            "undefined": list(self.undefined),
        }


def summary_metrics(cm: ConfusionMatrix) -> MetricsSummary:
    undefined: list[str] = []

    def ratio(num: int, den: int, name: str) -> float | None:
        if den == 0:
            undefined.append(name)
            return None
        return num / den

    tpr = ratio(cm.tp, cm.tp + cm.fn, "tpr")
    tnr = ratio(cm.tn, cm.tn + cm.fp, "tnr")
    accuracy = ratio(cm.tp + cm.tn, cm.total, "accuracy")
    f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, "f1")
    if tpr is None or tnr is None:
        undefined.append("ber")
        ber = None
    else:
        ber = 1.0 - (tpr + tnr) / 2.0
    return MetricsSummary(tpr, tnr, accuracy, f1, ber, tuple(undefined))


def choose_threshold(train_scores, train_labels) -> float:
    """Threshold maximizing Youden's J on training scores.

    Candidates are the distinct scores (the >= rule makes each achievable);
    ties prefer the larger threshold.
    """
    scores, labels = _validate_scores_labels(train_scores, train_labels)
    _require_two_classes(labels)
    best_t, best_j = None, -np.inf
    for fpr, tpr, t in roc_curve(scores, labels):
        if not np.isfinite(t):
            continue
        j = tpr - fpr
        if j > best_j:  # descending thresholds: first max is the largest t
            best_j, best_t = j, t
    return float(best_t)


def write_roc_csv(path, points: list[tuple[float, float, float]]) -> None:
    lines = ["threshold,fpr,tpr"]
    for fpr, tpr, t in points:
        lines.append(f"{float(t)!r},{float(fpr)!r},{float(tpr)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
