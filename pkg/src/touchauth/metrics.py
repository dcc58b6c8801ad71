"""Biometric verification metrics.

The positive class is "accepted as genuine": a false positive is an imposter
let in, a false negative is the genuine user turned away. Labels follow the
dataset convention, 0 genuine and 1 imposter, and a sample is accepted when
its genuine score is at least the threshold.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

METRIC_NAMES = ("accuracy", "fpr", "fnr", "tpr", "tnr", "eer")


class EmptyTestSet(ValueError):
    pass


class OneClassOnly(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    fpr: float
    fnr: float
    tpr: float
    tnr: float
    eer: float
    counts: ConfusionCounts

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("counts"))
        return d


def _split_scores(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d and of equal length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 (genuine) or 1 (imposter)")
    return scores[labels == 0], scores[labels == 1]


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionCounts:
    genuine, imposter = _split_scores(scores, labels)
    if genuine.size + imposter.size == 0:
        raise EmptyTestSet("no scores to evaluate")
    tp = int((genuine >= threshold).sum())
    fp = int((imposter >= threshold).sum())
    return ConfusionCounts(tp=tp, fp=fp, tn=imposter.size - fp, fn=genuine.size - tp)


def _rate(num: int, den: int) -> float:
    return num / den if den else 0.0


def error_rates(counts: ConfusionCounts) -> tuple[float, float]:
    """(FPR, FNR); a rate with an empty denominator is reported as 0."""
    return _rate(counts.fp, counts.fp + counts.tn), _rate(counts.fn, counts.fn + counts.tp)


def det_curve(scores, labels) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """FPR and FNR at every distinct score plus the two infinite endpoints.

    Thresholds are ascending, so FPR is non-increasing and FNR non-decreasing.
    """
    genuine, imposter = _split_scores(scores, labels)
    if genuine.size == 0 or imposter.size == 0:
        raise OneClassOnly("need both genuine and imposter scores")
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([genuine, imposter])), [np.inf]])
    genuine.sort()
    imposter.sort()
    # accepted iff score >= t
    fpr = (imposter.size - np.searchsorted(imposter, thresholds, side="left")) / imposter.size
    fnr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return thresholds, fpr, fnr


def eer(scores, labels) -> float:
    """Equal error rate: where the (FPR, FNR) polyline of the sweep crosses FPR = FNR."""
    _, fpr, fnr = det_curve(scores, labels)
    diff = fpr - fnr
    j = int(np.argmax(diff <= 0))  # diff ends at -1, so a crossing exists
    if diff[j] == 0:
        return float(fpr[j])
    a = diff[j - 1] / (diff[j - 1] - diff[j])
    return float(fpr[j - 1] + a * (fpr[j] - fpr[j - 1]))


def evaluate(scores, labels, threshold: float = 0.5) -> MetricsReport:
    counts = confusion(scores, labels, threshold)
    fpr, fnr = error_rates(counts)
    try:
        equal = eer(scores, labels)
    except OneClassOnly:
        equal = float("nan")
    return MetricsReport(
        accuracy=(counts.tp + counts.tn) / counts.total,
        fpr=fpr,
        fnr=fnr,
        tpr=_rate(counts.tp, counts.tp + counts.fn) if counts.tp + counts.fn else 1.0 - fnr,
        tnr=_rate(counts.tn, counts.tn + counts.fp) if counts.tn + counts.fp else 1.0 - fpr,
        eer=equal,
        counts=counts,
    )


def summarize(reports) -> tuple[dict[str, float], dict[str, float]]:
    """Per-metric mean and population standard deviation across reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    mean, std = {}, {}
    for name in METRIC_NAMES:
        values = np.array([getattr(r, name) for r in reports], dtype=float)
        mean[name] = float(values.mean())
        std[name] = float(values.std())
    return mean, std
