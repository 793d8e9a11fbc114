"""Drift scoring between representation snapshots of a fixed probe set."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import RowCountMismatchError, UnknownMetricError
from .numerics import as_embedding
from .rng import RandomStream
from .similarity import (
    debiased_cka,
    mmd_rbf,
    procrustes_similarity,
    rdm_pearson,
    rsa_spearman,
    sliced_wasserstein,
)
from .synthetic import EncoderTransform, apply_encoder
from .inference import DriftSeries

# 1 - similarity metrics plus raw-distance metrics; "stability" drift is the
# rank disagreement of the two snapshots' RDMs.
DRIFT_METRICS = ("rdm_spearman", "cka", "procrustes", "rdm_pearson", "wasserstein", "mmd")
_ALIASES = {"stability": "rdm_spearman"}


def canonical_drift_metric(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in DRIFT_METRICS:
        raise UnknownMetricError(f"unknown drift metric {name!r}")
    return name


def drift_score(
    baseline,
    current,
    metric: str = "rdm_spearman",
    stream: RandomStream | None = None,
) -> float:
    """Drift of ``current`` away from ``baseline``.

    Similarity-based metrics report 1 - similarity; Wasserstein and MMD are
    raw distances. The two snapshots must be row-aligned (same probe set).
    """
    baseline = as_embedding(baseline)
    current = as_embedding(current)
    if baseline.shape[0] != current.shape[0]:
        raise RowCountMismatchError("baseline and current must share probe rows")
    metric = canonical_drift_metric(metric)
    if metric == "rdm_spearman":
        return 1.0 - rsa_spearman(baseline, current, "cosine")
    if metric == "rdm_pearson":
        return 1.0 - rdm_pearson(baseline, current, "cosine")
    if metric == "cka":
        return 1.0 - debiased_cka(baseline, current)
    if metric == "procrustes":
        return 1.0 - procrustes_similarity(baseline, current)
    if metric == "wasserstein":
        return sliced_wasserstein(baseline, current, stream=stream or RandomStream(320))
    return mmd_rbf(baseline, current)


def gaussian_noise_family(
    baseline: np.ndarray, stream: RandomStream
) -> Callable[[int, float], np.ndarray]:
    """Per-level perturber adding Gaussian noise scaled by sigma * std(x)."""
    baseline = as_embedding(baseline)

    def perturb(index: int, sigma: float) -> np.ndarray:
        if sigma == 0.0:
            return baseline
        seed = int(stream.substream(index).integers(2**63))
        return apply_encoder(baseline, EncoderTransform("noise", sigma=sigma, seed=seed))

    return perturb


def build_drift_series(
    baseline,
    levels: Sequence[float],
    metrics: Sequence[str],
    stream: RandomStream | None = None,
    perturber: Callable[[int, float], np.ndarray] | None = None,
    accuracy_fn: Callable[[np.ndarray], float] | None = None,
) -> DriftSeries:
    """Evaluate drift metrics (and optional accuracy) across a perturbation sweep.

    The default perturber injects Gaussian noise at each level with a
    level-indexed derived seed, so the series is deterministic across reruns
    and worker counts.
    """
    baseline = as_embedding(baseline)
    stream = stream or RandomStream(320)
    metrics = [canonical_drift_metric(m) for m in metrics]
    perturb = perturber or gaussian_noise_family(baseline, stream.derive(0))
    values: dict[str, list[float]] = {m: [] for m in metrics}
    accuracy: list[float] = []
    for i, level in enumerate(levels):
        perturbed = perturb(i, float(level))
        for m in metrics:
            values[m].append(drift_score(baseline, perturbed, m, stream=stream.derive(1)))
        if accuracy_fn is not None:
            accuracy.append(float(accuracy_fn(perturbed)))
    return DriftSeries(
        levels=tuple(float(v) for v in levels),
        metrics={m: tuple(v) for m, v in values.items()},
        accuracy=tuple(accuracy) if accuracy_fn is not None else None,
    )
