"""Split-half geometric stability variants and supervised-geometry baselines.

The unsupervised variants quantify how consistently a representation's pairwise
distance structure reappears across internal views (feature halves, sample
halves, trial halves); the supervised variants measure agreement between the
geometry and a label structure. All scores are deterministic for a fixed
configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassTooSmallError,
    ConditionTooSmallError,
    DegenerateError,
    DegenerateShiftError,
    EmptyWithinPairsError,
    LengthMismatchError,
    SingularWithinCovarianceError,
    TooFewCellsError,
    TooFewClassesError,
    TooFewConditionsError,
    TooFewFeaturesError,
    TooFewSamplesError,
    UnsupportedClassCountError,
    ZeroCentroidError,
    ZeroNormRowError,
    ZeroTotalVarianceError,
)
from .numerics import (
    ROW_NORM_EPS,
    as_embedding,
    compute_rdm,
    l2_normalize_rows,
    spearman,
    zca_whiten,
    zca_whitening_transform,
    zscore_columns,
)
from .rng import RandomStream


@dataclass(frozen=True)
class StabilityConfig:
    """Configuration shared by the split-averaged stability variants."""

    n_splits: int = 30
    distance: str = "cosine"
    max_samples: int | None = 1600
    seed: int = 320
    degenerate_policy: str = "zero"  # or "error"

    def __post_init__(self):
        if self.n_splits < 1:
            raise ValueError("n_splits must be >= 1")
        if self.max_samples is not None and self.max_samples < 4:
            raise ValueError("max_samples must be >= 4 when set")
        if self.degenerate_policy not in ("zero", "error"):
            raise ValueError("degenerate_policy must be 'zero' or 'error'")


@dataclass(frozen=True)
class StabilityScore:
    """Mean stability with the per-split scores that produced it."""

    value: float
    per_split: tuple[float, ...] = field(default=())
    degenerate_splits: int = 0


def as_labels(y, n: int) -> np.ndarray:
    """Validate a length-n integer label vector; classes 0..C-1 all present."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise LengthMismatchError(f"labels must be a length-{n} vector")
    if not np.issubdtype(y.dtype, np.integer):
        yf = np.asarray(y, dtype=np.float64)
        if not np.all(np.isfinite(yf)) or np.any(yf != np.round(yf)):
            raise ValueError("labels must be integers")
        y = yf.astype(np.int64)
    else:
        y = y.astype(np.int64)
    if np.any(y < 0):
        raise ValueError("labels must be non-negative")
    present = np.unique(y)
    n_classes = int(y.max()) + 1
    if present.shape[0] != n_classes:
        missing = sorted(set(range(n_classes)) - set(present.tolist()))
        raise ValueError(f"classes {missing} have no samples")
    return y


def _subsample(x: np.ndarray, cfg: StabilityConfig, stream: RandomStream) -> np.ndarray:
    # One draw per metric call (substream 0) so all splits share the sample set.
    n = x.shape[0]
    if cfg.max_samples is None or n <= cfg.max_samples:
        return x
    idx = stream.substream(0).choice(n, size=cfg.max_samples, replace=False)
    return x[np.sort(idx)]


def _split_spearman(r1, r2, cfg: StabilityConfig) -> tuple[float, bool]:
    try:
        return spearman(r1, r2), False
    except DegenerateError:
        if cfg.degenerate_policy == "error":
            raise
        return 0.0, True


def _aggregate(scores: list[float], degenerate: list[bool]) -> StabilityScore:
    return StabilityScore(
        value=float(np.mean(scores)),
        per_split=tuple(scores),
        degenerate_splits=int(sum(degenerate)),
    )


def feature_split_stability(x, cfg: StabilityConfig = StabilityConfig()) -> StabilityScore:
    """Agreement between RDMs built from disjoint random feature halves.

    For each split a random permutation of the feature indices is cut in two
    (the first half gets ceil(d/2) columns); the two halves' condensed RDMs are
    compared with Spearman correlation and the K split scores are averaged.
    """
    x = as_embedding(x)
    n, d = x.shape
    if d < 2:
        raise TooFewFeaturesError("feature split needs at least 2 features")
    if n < 4:
        raise TooFewSamplesError("feature split needs at least 4 samples")
    stream = RandomStream(cfg.seed)
    x = _subsample(x, cfg, stream)
    half = math.ceil(d / 2)
    scores, degenerate = [], []
    for k in range(cfg.n_splits):
        perm = stream.substream(k + 1).permutation(d)
        r1 = compute_rdm(x[:, perm[:half]], cfg.distance).condensed
        r2 = compute_rdm(x[:, perm[half:]], cfg.distance).condensed
        s, bad = _split_spearman(r1, r2, cfg)
        scores.append(s)
        degenerate.append(bad)
    return _aggregate(scores, degenerate)


def _anchor_profile_rdm(x, anchor_idx, half_idx, kind) -> np.ndarray:
    """Second-order dissimilarities between anchors' distance profiles.

    Entry (p, q) is the correlation distance between anchor p's and anchor q's
    vectors of ``kind`` distances to the half's samples.
    """
    anchors = x[anchor_idx]
    half = x[half_idx]
    if kind == "euclidean":
        d2 = (
            np.einsum("ij,ij->i", anchors, anchors)[:, None]
            + np.einsum("ij,ij->i", half, half)[None, :]
            - 2.0 * anchors @ half.T
        )
        profiles = np.sqrt(np.maximum(d2, 0.0))
    else:
        if kind == "correlation":
            anchors = anchors - anchors.mean(axis=1, keepdims=True)
            half = half - half.mean(axis=1, keepdims=True)
        an = np.linalg.norm(anchors, axis=1)
        hn = np.linalg.norm(half, axis=1)
        if np.any(an <= ROW_NORM_EPS) or np.any(hn <= ROW_NORM_EPS):
            raise ZeroNormRowError("degenerate row in anchor profile computation")
        profiles = 1.0 - (anchors / an[:, None]) @ (half / hn[:, None]).T
    pc = profiles - profiles.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(pc, axis=1)
    if np.any(norms <= ROW_NORM_EPS):
        raise DegenerateError("anchor has a constant distance profile")
    g = np.clip((pc / norms[:, None]) @ (pc / norms[:, None]).T, -1.0, 1.0)
    iu = np.triu_indices(len(anchor_idx), k=1)
    return (1.0 - g)[iu]


def _sample_split_score(x, anchor_idx, s1_idx, s2_idx, kind) -> float:
    r1 = _anchor_profile_rdm(x, anchor_idx, s1_idx, kind)
    r2 = _anchor_profile_rdm(x, anchor_idx, s2_idx, kind)
    return spearman(r1, r2)


def sample_split_stability(
    x, cfg: StabilityConfig = StabilityConfig(), anchors: int = 32
) -> StabilityScore:
    """Agreement of anchor-relative geometry across disjoint sample halves.

    Each split draws an anchor set and partitions the remaining samples into
    two halves; each half is summarized by the anchor-anchor matrix of
    correlation distances between the anchors' distance profiles to that
    half's samples, and the two summaries are compared with Spearman.
    """
    x = as_embedding(x)
    stream = RandomStream(cfg.seed)
    x = _subsample(x, cfg, stream)
    n = x.shape[0]
    if n < 3 * anchors:
        raise TooFewSamplesError(f"sample split needs n >= 3 * anchors = {3 * anchors}")
    scores, degenerate = [], []
    for k in range(cfg.n_splits):
        perm = stream.substream(k + 1).permutation(n)
        anchor_idx = perm[:anchors]
        rest = perm[anchors:]
        half = rest.shape[0] // 2
        try:
            s = _sample_split_score(x, anchor_idx, rest[:half], rest[half:], cfg.distance)
            bad = False
        except DegenerateError:
            if cfg.degenerate_policy == "error":
                raise
            s, bad = 0.0, True
        scores.append(s)
        degenerate.append(bad)
    return _aggregate(scores, degenerate)


def _class_indices(y: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(y == c) for c in range(int(y.max()) + 1)]


def _centroids(x: np.ndarray, index_groups) -> np.ndarray:
    return np.stack([x[idx].mean(axis=0) for idx in index_groups])


def label_conditioned_stability(
    x, y, cfg: StabilityConfig = StabilityConfig()
) -> StabilityScore:
    """Stability of the class-centroid RDM across class-balanced sample halves."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    groups = _class_indices(y)
    if len(groups) < 3:
        raise TooFewClassesError("label-conditioned stability needs at least 3 classes")
    for c, idx in enumerate(groups):
        if idx.shape[0] < 2:
            raise ClassTooSmallError(f"class {c} has fewer than 2 samples")
    stream = RandomStream(cfg.seed)
    scores, degenerate = [], []
    for k in range(cfg.n_splits):
        gen = stream.substream(k + 1)
        h1, h2 = [], []
        for idx in groups:
            perm = idx[gen.permutation(idx.shape[0])]
            cut = perm.shape[0] // 2
            h1.append(perm[:cut])
            h2.append(perm[cut:])
        r1 = compute_rdm(_centroids(x, h1), cfg.distance).condensed
        r2 = compute_rdm(_centroids(x, h2), cfg.distance).condensed
        s, bad = _split_spearman(r1, r2, cfg)
        scores.append(s)
        degenerate.append(bad)
    return _aggregate(scores, degenerate)


def label_rdm(y: np.ndarray) -> np.ndarray:
    """Condensed binary label dissimilarity: 0 for same class, 1 otherwise."""
    y = np.asarray(y)
    iu = np.triu_indices(y.shape[0], k=1)
    return (y[iu[0]] != y[iu[1]]).astype(np.float64)


def supervised_rdm_alignment(x, y, distance: str = "cosine") -> float:
    """Spearman correlation between the embedding RDM and the label RDM."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    if int(y.max()) + 1 < 2:
        raise TooFewClassesError("supervised alignment needs at least 2 classes")
    return spearman(compute_rdm(x, distance).condensed, label_rdm(y))


def variance_ratio(x, y) -> float:
    """Between-class variance as a fraction of total variance, in [0, 1]."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    mu = x.mean(axis=0)
    total = float(np.sum((x - mu) ** 2))
    if total <= 0.0:
        raise ZeroTotalVarianceError("total variance is zero")
    between = 0.0
    for idx in _class_indices(y):
        mu_c = x[idx].mean(axis=0)
        between += idx.shape[0] * float(np.sum((mu_c - mu) ** 2))
    return between / total


def zscore_variance_ratio(x, y) -> float:
    """Variance ratio computed on per-feature z-scored data.

    Equalizing feature scales first stops high-variance features from
    dominating the between-class share.
    """
    return variance_ratio(zscore_columns(x), y)


def _stratified_subsample(groups, frac: float, gen: np.random.Generator) -> np.ndarray:
    picks = []
    for idx in groups:
        count = max(1, int(round(frac * idx.shape[0])))
        picks.append(idx[gen.choice(idx.shape[0], size=count, replace=False)])
    return np.concatenate(picks)


def class_separation_ratio(
    x,
    y,
    bootstrap_iters: int = 50,
    frac: float = 0.5,
    stream: RandomStream | None = None,
) -> float:
    """Mean between-class over mean within-class cosine distance.

    Estimated over stratified subsamples (class presence preserved); a
    subsample with no within-class pair is redrawn up to 10 times.
    """
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    if int(y.max()) + 1 < 2:
        raise TooFewClassesError("class separation needs at least 2 classes")
    groups = _class_indices(y)
    stream = stream or RandomStream(320)
    ratios = []
    for b in range(bootstrap_iters):
        gen = stream.substream(b)
        for attempt in range(10):
            idx = _stratified_subsample(groups, frac, gen)
            ys = y[idx]
            cond = compute_rdm(x[idx], "cosine").condensed
            same = label_rdm(ys) == 0.0
            if np.any(same):
                break
        else:
            raise EmptyWithinPairsError(
                "no within-class pair after 10 subsample attempts"
            )
        within = float(cond[same].mean())
        between = float(cond[~same].mean()) if np.any(~same) else 0.0
        if within <= 0.0:
            # identical duplicated points: treat as maximal separation signal
            ratios.append(float("inf") if between > 0.0 else 1.0)
        else:
            ratios.append(between / within)
    return float(np.mean(ratios))


def lda_direction(x, y, shrinkage: float = 0.1) -> np.ndarray:
    """Unit Fisher discriminant direction for two classes.

    Solves (pooled within-class covariance, shrunk toward isotropy) w = mu1 - mu0.
    """
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    if int(y.max()) + 1 != 2:
        raise UnsupportedClassCountError("the discriminant direction is defined for 2 classes")
    d = x.shape[1]
    sw = np.zeros((d, d))
    mus = []
    for idx in _class_indices(y):
        xc = x[idx] - x[idx].mean(axis=0)
        sw += xc.T @ xc
        mus.append(x[idx].mean(axis=0))
    sw /= x.shape[0]
    trace = float(np.trace(sw))
    if trace <= 0.0:
        raise SingularWithinCovarianceError("zero within-class covariance")
    sw = (1.0 - shrinkage) * sw + shrinkage * (trace / d) * np.eye(d)
    try:
        w = np.linalg.solve(sw, mus[1] - mus[0])
    except np.linalg.LinAlgError as exc:
        raise SingularWithinCovarianceError(str(exc)) from exc
    norm = float(np.linalg.norm(w))
    if norm <= ROW_NORM_EPS:
        raise SingularWithinCovarianceError("degenerate discriminant direction")
    return w / norm


def lda_direction_stability(
    x,
    y,
    bootstrap_iters: int = 50,
    frac: float = 0.5,
    stream: RandomStream | None = None,
    shrinkage: float = 0.1,
) -> float:
    """Mean |cos| between the full-data discriminant and subsample refits."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    w_full = lda_direction(x, y, shrinkage)
    groups = _class_indices(y)
    stream = stream or RandomStream(320)
    agreements = []
    for b in range(bootstrap_iters):
        idx = _stratified_subsample(groups, frac, stream.substream(b))
        # re-encode labels on the subsample (both classes kept by stratification)
        w_b = lda_direction(x[idx], y[idx], shrinkage)
        agreements.append(abs(float(w_full @ w_b)))
    return float(np.mean(agreements))


def _parity_centroids(x, conditions, parity: int) -> np.ndarray:
    cents = []
    for idx in _class_indices(conditions):
        take = idx[parity::2]
        cents.append(x[take].mean(axis=0))
    return np.stack(cents)


def trial_split_stability(x, conditions, distance: str = "cosine") -> float:
    """Spearman agreement of odd-trial vs even-trial condition-centroid RDMs."""
    x = as_embedding(x)
    conditions = as_labels(conditions, x.shape[0])
    groups = _class_indices(conditions)
    if len(groups) < 3:
        raise TooFewConditionsError("trial split needs at least 3 conditions")
    for c, idx in enumerate(groups):
        if idx.shape[0] < 2:
            raise ConditionTooSmallError(f"condition {c} has fewer than 2 trials")
    r_odd = compute_rdm(_parity_centroids(x, conditions, 0), distance).condensed
    r_even = compute_rdm(_parity_centroids(x, conditions, 1), distance).condensed
    return spearman(r_odd, r_even)


def whitened_trial_split(x, conditions, shrinkage: float = 0.1) -> float:
    """Trial-split stability after shrinkage-whitened ZCA of the trials."""
    return trial_split_stability(zca_whiten(x, shrinkage), conditions)


def centroid_drift(x, split_index: int) -> float:
    """Cosine similarity between early-epoch and late-epoch centroids.

    Rows are L2-normalized first so multiplicative rate changes cannot drive
    the score.
    """
    x = as_embedding(x)
    n = x.shape[0]
    if split_index < 1 or split_index >= n:
        raise TooFewSamplesError("both epochs must be non-empty")
    xn = l2_normalize_rows(x)
    c_early = xn[:split_index].mean(axis=0)
    c_late = xn[split_index:].mean(axis=0)
    ne, nl = np.linalg.norm(c_early), np.linalg.norm(c_late)
    if ne <= ROW_NORM_EPS or nl <= ROW_NORM_EPS:
        raise ZeroCentroidError("an epoch centroid has near-zero norm")
    return float(np.clip(c_early @ c_late / (ne * nl), -1.0, 1.0))


def perturbation_coherence(
    control,
    perturbed,
    variant: str = "euclidean",
    knn_k: int = 50,
    shrinkage: float = 0.1,
) -> float:
    """Mean cosine between per-cell shift vectors and the mean shift direction.

    Shift vectors are perturbed rows minus the control centroid (``euclidean``),
    minus the centroid after control-fitted whitening (``whitened``), or minus
    the centroid of each cell's k nearest control rows (``knn``). Cells with
    shift norm <= 1e-6 are excluded from the average.
    """
    control = as_embedding(control)
    perturbed = as_embedding(perturbed)
    if control.shape[1] != perturbed.shape[1]:
        raise LengthMismatchError("control and perturbed must share feature count")
    if perturbed.shape[0] < 10:
        raise TooFewCellsError("perturbation coherence needs at least 10 perturbed cells")
    if variant not in ("euclidean", "whitened", "knn"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "whitened":
        mean, w = zca_whitening_transform(control, shrinkage)
        control = (control - mean) @ w
        perturbed = (perturbed - mean) @ w
    if variant == "knn":
        k = min(knn_k, control.shape[0])
        d2 = (
            np.einsum("ij,ij->i", perturbed, perturbed)[:, None]
            + np.einsum("ij,ij->i", control, control)[None, :]
            - 2.0 * perturbed @ control.T
        )
        nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
        centroids = control[nearest].mean(axis=1)
        shifts = perturbed - centroids
    else:
        shifts = perturbed - control.mean(axis=0)
    mean_shift = shifts.mean(axis=0)
    mean_norm = float(np.linalg.norm(mean_shift))
    if mean_norm <= 1e-6:
        raise DegenerateShiftError("mean shift magnitude is below 1e-6")
    norms = np.linalg.norm(shifts, axis=1)
    valid = norms > 1e-6
    if not np.any(valid):
        raise DegenerateShiftError("all per-cell shifts are below 1e-6")
    cosines = (shifts[valid] @ mean_shift) / (norms[valid] * mean_norm)
    return float(np.mean(np.clip(cosines, -1.0, 1.0)))


def latent_perturbation_stability(base, perturbed_set) -> float:
    """1 / (1 + mean displacement of unit-normalized perturbed latents)."""
    base = np.asarray(base, dtype=np.float64).ravel()
    perturbed = as_embedding(perturbed_set)
    if perturbed.shape[1] != base.shape[0]:
        raise LengthMismatchError("base and perturbed dimensionality differ")
    bn = float(np.linalg.norm(base))
    pn = np.linalg.norm(perturbed, axis=1)
    if bn <= ROW_NORM_EPS or np.any(pn <= ROW_NORM_EPS):
        raise ZeroNormRowError("zero-norm latent vector")
    disp = np.linalg.norm(perturbed / pn[:, None] - base / bn, axis=1)
    return 1.0 / (1.0 + float(disp.mean()))


def fisher_discriminant(x, y) -> float:
    """Trace-form ratio of between-class to within-class variance."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    groups = _class_indices(y)
    if len(groups) < 2:
        raise TooFewClassesError("Fisher discriminant needs at least 2 classes")
    for c, idx in enumerate(groups):
        if idx.shape[0] < 2:
            raise ClassTooSmallError(f"class {c} has fewer than 2 samples")
    mu = x.mean(axis=0)
    between = sum(
        idx.shape[0] * float(np.sum((x[idx].mean(axis=0) - mu) ** 2)) for idx in groups
    )
    within = sum(float(np.sum((x[idx] - x[idx].mean(axis=0)) ** 2)) for idx in groups)
    if within <= 0.0:
        raise ZeroTotalVarianceError("zero within-class variance")
    return between / within


def silhouette_score(x, y) -> float:
    """Mean silhouette ((b - a) / max(a, b)) with cosine distance."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    groups = _class_indices(y)
    if len(groups) < 2:
        raise TooFewClassesError("silhouette needs at least 2 classes")
    for c, idx in enumerate(groups):
        if idx.shape[0] < 2:
            raise ClassTooSmallError(f"class {c} has fewer than 2 samples")
    n = x.shape[0]
    xn = l2_normalize_rows(x)
    dist = 1.0 - np.clip(xn @ xn.T, -1.0, 1.0)
    sil = np.empty(n)
    counts = {c: idx.shape[0] for c, idx in enumerate(groups)}
    for i in range(n):
        own = int(y[i])
        a = dist[i, y == own].sum() / (counts[own] - 1)
        b = min(
            dist[i, y == other].mean()
            for other in counts
            if other != own
        )
        denom = max(a, b)
        sil[i] = 0.0 if denom <= 0.0 else (b - a) / denom
    return float(sil.mean())


def anisotropy(x) -> float:
    """Fraction of total variance carried by the first principal component."""
    x = as_embedding(x)
    xc = x - x.mean(axis=0, keepdims=True)
    s = np.linalg.svd(xc, compute_uv=False)
    total = float(np.sum(s**2))
    if total <= 0.0:
        raise ZeroTotalVarianceError("total variance is zero")
    return float(s[0] ** 2 / total)
