"""Classification, calibration and ranking metrics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .exceptions import ArgumentError, ShapeError, UndefinedMetricError

DEFAULT_BINS = 15
NLL_CLAMP = 1e-12
SCORE_KINDS = ("msp", "entropy", "pc")


def _labels(truth, n=None):
    truth = np.asarray(truth)
    if truth.ndim != 1:
        raise ShapeError("labels must be 1-D")
    if n is not None and truth.shape[0] != n:
        raise ShapeError(f"{truth.shape[0]} labels for {n} predictions")
    return truth.astype(np.int64)


def _probs(probs):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ShapeError("probabilities must be N x C")
    return probs


def accuracy(pred, truth):
    pred = np.asarray(pred)
    truth = _labels(truth, pred.shape[0] if pred.ndim else None)
    if truth.size == 0:
        raise ArgumentError("accuracy of an empty set")
    return float(np.mean(pred == truth))


@dataclass
class BinTable:
    """Reliability-diagram data: one row per confidence bin."""

    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    confidence: np.ndarray
    accuracy: np.ndarray

    def rows(self):
        return list(zip(self.lower, self.upper, self.count, self.confidence, self.accuracy))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin", "lower", "upper", "count", "mean_confidence", "accuracy"])
            for i, (lo, hi, n, conf, acc) in enumerate(self.rows()):
                w.writerow([i, repr(float(lo)), repr(float(hi)), int(n), repr(float(conf)), repr(float(acc))])


def confidence_bins(confidence, num_classes, n_bins=DEFAULT_BINS):
    """Equal-width bin index over ``(1/C, 1]``; values on an edge go to the upper bin."""
    lo = 1.0 / num_classes
    width = (1.0 - lo) / n_bins
    idx = np.floor((np.asarray(confidence) - lo) / width).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def ece(probs, truth, n_bins=DEFAULT_BINS):
    """Expected calibration error and the per-bin table.

    Bins split ``(1/C, 1]`` into ``n_bins`` equal intervals of max-probability
    confidence; empty bins contribute nothing.
    """
    if int(n_bins) <= 0:
        raise ArgumentError("n_bins must be positive")
    probs = _probs(probs)
    truth = _labels(truth, probs.shape[0])
    n, C = probs.shape
    if n == 0:
        raise ArgumentError("ECE of an empty set")
    conf = probs.max(axis=1)
    correct = (np.argmax(probs, axis=1) == truth).astype(np.float64)
    idx = confidence_bins(conf, C, n_bins)
    count = np.bincount(idx, minlength=n_bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=n_bins)
    acc_sum = np.bincount(idx, weights=correct, minlength=n_bins)
    nonempty = count > 0
    mean_conf = np.zeros(n_bins)
    mean_acc = np.zeros(n_bins)
    mean_conf[nonempty] = conf_sum[nonempty] / count[nonempty]
    mean_acc[nonempty] = acc_sum[nonempty] / count[nonempty]
    value = float(np.sum(count / n * np.abs(mean_acc - mean_conf)))
    lo = 1.0 / C
    edges = lo + (1.0 - lo) * np.arange(n_bins + 1) / n_bins
    return value, BinTable(edges[:-1], edges[1:], count, mean_conf, mean_acc)


def nll(probs, truth, clamp=NLL_CLAMP):
    probs = _probs(probs)
    truth = _labels(truth, probs.shape[0])
    p = probs[np.arange(len(truth)), truth]
    return float(-np.mean(np.log(np.maximum(p, clamp))))


def brier(probs, truth):
    probs = _probs(probs)
    truth = _labels(truth, probs.shape[0])
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(truth)), truth] = 1.0
    return float(np.mean(np.sum((probs - onehot) ** 2, axis=1)))


@dataclass
class ScoreSet:
    """Uncertainty scores with binary targets (1 = positive: error or OOD)."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.int64)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise ShapeError("scores and labels must be 1-D with equal length")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ArgumentError("binary labels must be 0 or 1")

    @property
    def n_pos(self):
        return int(self.labels.sum())

    @property
    def n_neg(self):
        return int(self.labels.size - self.labels.sum())

    def flipped(self):
        return ScoreSet(self.scores, 1 - self.labels)


def auroc(score_set):
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Ties between a positive and a negative count one half, which equals the
    trapezoidal area over all empirical thresholds.
    """
    s = score_set
    n_pos, n_neg = s.n_pos, s.n_neg
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs at least one positive and one negative")
    ranks = rankdata(s.scores)
    rank_sum = ranks[s.labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def uncertainty_scores(report, kind="pc"):
    """Per-node uncertainty: ``1 - msp``, predictive entropy, or ``1 - u``."""
    if kind == "msp":
        return 1.0 - report.msp
    if kind == "entropy":
        return np.asarray(report.entropy, dtype=np.float64)
    if kind == "pc":
        # 1 - exp(-x), accurate for small residuals
        return -np.expm1(-np.asarray(report.pc_error_norm, dtype=np.float64))
    raise ArgumentError(f"unknown score kind {kind!r}; expected one of {SCORE_KINDS}")


def error_detection_scores(report, truth, kind="msp"):
    truth = _labels(truth, len(report.predicted))
    return ScoreSet(uncertainty_scores(report, kind), (report.predicted != truth).astype(np.int64))


def ood_detection(id_scores, ood_scores):
    """AUROC for separating OOD (positive) from ID samples by uncertainty."""
    id_scores = np.asarray(id_scores, dtype=np.float64).ravel()
    ood_scores = np.asarray(ood_scores, dtype=np.float64).ravel()
    if id_scores.size == 0 or ood_scores.size == 0:
        raise ArgumentError("OOD detection needs non-empty ID and OOD score sets")
    return auroc(ScoreSet(np.concatenate([id_scores, ood_scores]),
                          np.concatenate([np.zeros(id_scores.size), np.ones(ood_scores.size)])))


@dataclass
class CorrelationResult:
    pc_error_norm: np.ndarray
    msp: np.ndarray
    pearson: float
    defined: bool
    bin_centers: np.ndarray
    bin_counts: np.ndarray
    bin_mean_msp: np.ndarray

    def pairs_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "pc_error_norm", "msp"])
            for i, (e, m) in enumerate(zip(self.pc_error_norm, self.msp)):
                w.writerow([i, repr(float(e)), repr(float(m))])

    def bins_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin", "pc_error_center", "count", "mean_msp"])
            for i, (c, n, m) in enumerate(zip(self.bin_centers, self.bin_counts, self.bin_mean_msp)):
                w.writerow([i, repr(float(c)), int(n), repr(float(m))])


def pearson(x, y):
    """Pearson correlation; NaN when either variable has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    if denom == 0.0:
        return float("nan")
    return float(np.dot(dx, dy) / denom)


def pc_confidence_correlation(error_norm, msp=None, n_bins=10):
    """Pair per-node PC error with MSP confidence.

    Accepts a prediction report or two arrays. Returns the raw pairs, MSP
    averaged over equal-width error bins, and the Pearson coefficient
    (``defined`` is False when either variable is constant).
    """
    if msp is None:
        error_norm, msp = error_norm.pc_error_norm, error_norm.msp
    err = np.asarray(error_norm, dtype=np.float64).ravel()
    msp = np.asarray(msp, dtype=np.float64).ravel()
    if err.shape != msp.shape:
        raise ShapeError("error norms and confidences differ in length")
    if err.size < 3:
        raise ArgumentError("correlation needs at least 3 nodes")
    r = pearson(err, msp)
    lo, hi = float(err.min()), float(err.max())
    if hi > lo:
        edges = np.linspace(lo, hi, n_bins + 1)
        idx = np.clip(np.searchsorted(edges, err, side="right") - 1, 0, n_bins - 1)
    else:
        edges = np.array([lo, lo + 1.0])
        idx = np.zeros(err.size, dtype=np.int64)
        n_bins = 1
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=msp, minlength=n_bins)
    means = np.full(n_bins, np.nan)
    means[counts > 0] = sums[counts > 0] / counts[counts > 0]
    centers = (edges[:-1] + edges[1:]) / 2.0
    return CorrelationResult(err, msp, r, not math.isnan(r), centers, counts, means)


@dataclass
class MetricsReport:
    accuracy: float
    ece: float
    nll: float
    brier: float
    auroc_error: Optional[float]
    auroc_ood: Optional[float] = None
    n: int = 0
    bins: int = DEFAULT_BINS
    temperature: float = 1.0
    score_kind: str = "pc"
    notes: list = field(default_factory=list)
    bin_table: Optional[BinTable] = field(default=None, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("bin_table")
        return d

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def evaluate(report, truth, n_bins=DEFAULT_BINS, score_kind="pc"):
    """Full metric battery for one prediction report."""
    truth = _labels(truth, len(report.predicted))
    probs = report.probabilities
    value, table = ece(probs, truth, n_bins)
    notes = []
    try:
        au = auroc(error_detection_scores(report, truth, score_kind))
    except UndefinedMetricError:
        au = None
        notes.append("auroc_error undefined: all predictions correct or all wrong")
    return MetricsReport(
        accuracy=accuracy(report.predicted, truth),
        ece=value,
        nll=nll(probs, truth),
        brier=brier(probs, truth),
        auroc_error=au,
        n=int(len(truth)),
        bins=int(n_bins),
        temperature=float(report.temperature),
        score_kind=score_kind,
        notes=notes,
        bin_table=table,
    )
