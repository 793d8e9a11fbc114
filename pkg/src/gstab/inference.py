"""Resampling inference and detection analytics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AllReplicatesDegenerateError,
    CollinearControlsError,
    DegenerateError,
    EmptySeriesError,
    LengthMismatchError,
    LevelMismatchError,
    NoStablePointsError,
    SingleClassError,
    TooShortError,
)
from .numerics import average_ranks, pearson
from .rng import RandomStream
from .stability import centroid_drift


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    ci_low: float
    ci_high: float
    iterations: int
    dropped: int = 0
    warned: bool = False


def bootstrap_ci(
    data: np.ndarray,
    statistic: Callable[[np.ndarray], float],
    iterations: int = 10000,
    level: float = 0.95,
    stream: RandomStream | None = None,
) -> BootstrapResult:
    """Percentile bootstrap CI of ``statistic`` over resampled rows.

    Replicates that evaluate to NaN (or raise Degenerate, e.g. a constant
    resample) are excluded from the percentiles; more than 5% exclusions sets
    the ``warned`` flag. Replicate streams are derived by index, so the result
    does not depend on evaluation order or worker count.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if n < 2:
        raise TooShortError("bootstrap needs at least 2 rows")
    stream = stream or RandomStream(320)
    point = float(statistic(data))
    reps = np.empty(iterations)
    dropped = 0
    for b in range(iterations):
        idx = stream.substream(b).integers(0, n, size=n)
        try:
            reps[b] = float(statistic(data[idx]))
        except DegenerateError:
            reps[b] = np.nan
        if np.isnan(reps[b]):
            dropped += 1
    kept = reps[~np.isnan(reps)]
    if kept.size == 0:
        raise AllReplicatesDegenerateError("every bootstrap replicate was degenerate")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(kept, [alpha, 1.0 - alpha], method="linear")
    return BootstrapResult(
        point=point,
        ci_low=float(lo),
        ci_high=float(hi),
        iterations=iterations,
        dropped=dropped,
        warned=dropped > 0.05 * iterations,
    )


@dataclass(frozen=True)
class PermutationNull:
    observed: float
    null_mean: float
    null_std: float
    z: float
    permutations: int


def permutation_null_centroid(
    x: np.ndarray,
    split_index: int,
    permutations: int = 500,
    stream: RandomStream | None = None,
) -> PermutationNull:
    """Z-score of the observed centroid drift against a trial-shuffled null."""
    x = np.asarray(x, dtype=np.float64)
    observed = centroid_drift(x, split_index)
    stream = stream or RandomStream(320)
    null = np.empty(permutations)
    for p in range(permutations):
        perm = stream.substream(p).permutation(x.shape[0])
        null[p] = centroid_drift(x[perm], split_index)
    mu = float(null.mean())
    sigma = float(null.std())
    if sigma <= 0.0:
        if observed == mu:
            z = 0.0
        else:
            raise DegenerateError("null distribution has zero spread")
    else:
        z = (observed - mu) / sigma
    return PermutationNull(observed, mu, sigma, float(z), permutations)


def partial_spearman(a, b, controls: Sequence[np.ndarray] = ()) -> float:
    """Spearman correlation of ``a`` and ``b`` after removing rank-linear
    effects of the control variables.

    All vectors are rank-transformed; ``a`` and ``b`` are residualized on the
    controls (with intercept) by least squares and the residuals' Pearson
    correlation is returned. Empty controls reduce to plain Spearman.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    controls = [np.asarray(c, dtype=np.float64).ravel() for c in controls]
    n = a.shape[0]
    if b.shape[0] != n or any(c.shape[0] != n for c in controls):
        raise LengthMismatchError("all vectors must share a length")
    if n < len(controls) + 3:
        raise TooShortError("need at least len(controls) + 3 observations")
    ra = average_ranks(a)
    rb = average_ranks(b)
    design = np.column_stack([np.ones(n)] + [average_ranks(c) for c in controls])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise CollinearControlsError("control design matrix is rank-deficient")
    coef_a, _, _, _ = np.linalg.lstsq(design, ra, rcond=None)
    coef_b, _, _, _ = np.linalg.lstsq(design, rb, rcond=None)
    res_a = ra - design @ coef_a
    res_b = rb - design @ coef_b
    # a vector fully explained by the controls has no partial association left
    tol = 1e-9 * np.sqrt(n)
    if np.linalg.norm(res_a) <= tol or np.linalg.norm(res_b) <= tol:
        return 0.0
    return pearson(res_a, res_b)


@dataclass(frozen=True)
class DriftSeries:
    """Per-level drift values (and optional task accuracy) over a sweep."""

    levels: tuple[float, ...]
    metrics: dict[str, tuple[float, ...]] = field(default_factory=dict)
    accuracy: tuple[float, ...] | None = None

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.size == 0:
            raise EmptySeriesError("drift series has no levels")
        if np.any(np.diff(lv) <= 0):
            raise ValueError("levels must be strictly increasing")
        for name, vals in self.metrics.items():
            if len(vals) != lv.size:
                raise LengthMismatchError(f"metric {name!r} length mismatch")
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"metric {name!r} has non-finite drift values")
        if self.accuracy is not None and len(self.accuracy) != lv.size:
            raise LengthMismatchError("accuracy length mismatch")

    def metric(self, name: str) -> np.ndarray:
        if name not in self.metrics:
            raise KeyError(f"series has no metric {name!r}")
        return np.asarray(self.metrics[name], dtype=np.float64)


def detection_threshold(
    series: DriftSeries, metric: str, threshold: float = 0.05
) -> float | None:
    """Smallest perturbation level whose drift reaches the threshold."""
    drifts = series.metric(metric)
    hits = np.flatnonzero(drifts >= threshold)
    if hits.size == 0:
        return None
    return float(series.levels[int(hits[0])])


def early_warning_compare(
    series_a: DriftSeries,
    metric_a: str,
    metric_b: str,
    series_b: DriftSeries | None = None,
    threshold: float = 0.05,
) -> str:
    """Which metric crosses the detection threshold first ('tie' when equal)."""
    series_b = series_b or series_a
    if tuple(series_a.levels) != tuple(series_b.levels):
        raise LevelMismatchError("series levels differ")
    ta = detection_threshold(series_a, metric_a, threshold)
    tb = detection_threshold(series_b, metric_b, threshold)
    if ta is None and tb is None:
        return "tie"
    if ta is None:
        return metric_b
    if tb is None:
        return metric_a
    if ta < tb:
        return metric_a
    if tb < ta:
        return metric_b
    return "tie"


def _check_binary(truth: np.ndarray) -> np.ndarray:
    truth = np.asarray(truth).astype(bool)
    if truth.all() or not truth.any():
        raise SingleClassError("ground truth must contain both classes")
    return truth


def roc_auc(scores, ground_truth) -> float:
    """Area under the ROC curve via the rank statistic (ties averaged)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truth = _check_binary(ground_truth)
    if scores.shape[0] != truth.shape[0]:
        raise LengthMismatchError("scores and ground truth lengths differ")
    ranks = average_ranks(scores)
    n_pos = int(truth.sum())
    n_neg = truth.shape[0] - n_pos
    return float((ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def sensitivity_at_fpr(scores, ground_truth, fpr: float = 0.05) -> float:
    """Best true-positive rate over thresholds whose false-positive rate
    stays within the budget (score >= threshold flags positive)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truth = _check_binary(ground_truth)
    if scores.shape[0] != truth.shape[0]:
        raise LengthMismatchError("scores and ground truth lengths differ")
    n_pos = int(truth.sum())
    n_neg = truth.shape[0] - n_pos
    best = 0.0
    for t in np.unique(scores):
        flagged = scores >= t
        if float((flagged & ~truth).sum()) / n_neg <= fpr:
            best = max(best, float((flagged & truth).sum()) / n_pos)
    return best


def false_alarm_rate(
    series: DriftSeries,
    metric: str,
    drift_threshold: float = 0.05,
    stable_acc_drop: float = 0.01,
) -> float:
    """Fraction of functionally stable sweep points whose drift still triggers.

    Stable points are those whose accuracy drop from the first level is below
    ``stable_acc_drop``.
    """
    if series.accuracy is None:
        raise ValueError("series carries no accuracy values")
    acc = np.asarray(series.accuracy, dtype=np.float64)
    drops = acc[0] - acc
    stable = drops < stable_acc_drop
    if not np.any(stable):
        raise NoStablePointsError("no functionally stable points in the series")
    drifts = series.metric(metric)
    return float(np.mean(drifts[stable] >= drift_threshold))
