"""Cross-representation similarity and spectral-geometry metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBandwidthError,
    DimMismatchError,
    RankTooHighError,
    RowCountMismatchError,
    TooFewSamplesError,
    ZeroFrobeniusError,
    ZeroNormError,
    ZeroSpectrumError,
)
from .numerics import as_embedding, compute_rdm, pearson, spearman
from .rng import RandomStream


@dataclass(frozen=True)
class SimilarityValue:
    """A named similarity with optional auxiliary data (e.g. truncation rank)."""

    metric: str
    value: float
    aux: dict | None = None


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[0] != y.shape[0]:
        raise RowCountMismatchError(f"row counts differ: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 4:
        raise TooFewSamplesError("CKA needs at least 4 samples")
    return x, y


def linear_cka(x, y) -> float:
    """Linear CKA: normalized HSIC of the centered Gram matrices."""
    x, y = _paired(x, y)
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    cross = float(np.linalg.norm(yc.T @ xc) ** 2)
    nx = float(np.linalg.norm(xc.T @ xc))
    ny = float(np.linalg.norm(yc.T @ yc))
    if nx <= 0.0 or ny <= 0.0:
        raise ZeroNormError("a representation has zero centered Gram matrix")
    return cross / (nx * ny)


def _unbiased_hsic(k: np.ndarray, l: np.ndarray) -> float:
    # U-statistic HSIC with zeroed Gram diagonals and the three-term correction.
    n = k.shape[0]
    kt = k - np.diag(np.diag(k))
    lt = l - np.diag(np.diag(l))
    term1 = float(np.sum(kt * lt))
    term2 = float(kt.sum() * lt.sum()) / ((n - 1) * (n - 2))
    term3 = 2.0 * float(kt.sum(axis=0) @ lt.sum(axis=1)) / (n - 2)
    return (term1 + term2 - term3) / (n * (n - 3))


def debiased_cka(x, y) -> float:
    """Debiased linear CKA via the unbiased HSIC estimator (may be negative)."""
    x, y = _paired(x, y)
    k = x @ x.T
    l = y @ y.T
    hxy = _unbiased_hsic(k, l)
    hxx = _unbiased_hsic(k, k)
    hyy = _unbiased_hsic(l, l)
    if hxx <= 0.0 or hyy <= 0.0:
        raise ZeroNormError("degenerate Gram matrix in debiased CKA")
    return hxy / float(np.sqrt(hxx * hyy))


def _effective_rank_count(s: np.ndarray, threshold: float) -> int:
    energy = s**2
    total = float(energy.sum())
    if total <= 0.0:
        raise ZeroSpectrumError("zero spectrum")
    frac = np.cumsum(energy) / total
    return int(np.searchsorted(frac, threshold - 1e-15) + 1)


def pwcka_effective_rank(x, y, variance_threshold: float = 0.99) -> SimilarityValue:
    """Linear CKA after truncating both inputs to their shared effective rank.

    The rank is the smaller of the two component counts needed to reach the
    variance threshold; both representations are reduced to their top-k scaled
    principal coordinates before comparison.
    """
    x, y = _paired(x, y)
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    ux, sx, _ = np.linalg.svd(xc, full_matrices=False)
    uy, sy, _ = np.linalg.svd(yc, full_matrices=False)
    k = min(
        _effective_rank_count(sx, variance_threshold),
        _effective_rank_count(sy, variance_threshold),
    )
    value = linear_cka(ux[:, :k] * sx[:k], uy[:, :k] * sy[:k])
    return SimilarityValue("pwcka", value, aux={"effective_rank": k})


def procrustes_similarity(x, y) -> float:
    """Alignment after optimal rotation and scaling of standardized inputs.

    Both matrices are centered and scaled to unit Frobenius norm; the
    similarity is the squared trace norm of the cross-covariance, i.e.
    1 minus the optimal-scaling Procrustes disparity. Inputs of unequal width
    are zero-padded to the larger width.
    """
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[0] != y.shape[0]:
        raise RowCountMismatchError("Procrustes inputs must share the sample count")
    d = max(x.shape[1], y.shape[1])
    if x.shape[1] < d:
        x = np.pad(x, ((0, 0), (0, d - x.shape[1])))
    if y.shape[1] < d:
        y = np.pad(y, ((0, 0), (0, d - y.shape[1])))
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    nx = float(np.linalg.norm(xc))
    ny = float(np.linalg.norm(yc))
    if nx <= 0.0 or ny <= 0.0:
        raise ZeroFrobeniusError("a centered representation has zero Frobenius norm")
    s = np.linalg.svd((yc / ny).T @ (xc / nx), compute_uv=False)
    return float(min(1.0, s.sum() ** 2))


def rsa_spearman(x, y, kind: str = "cosine") -> float:
    """Spearman correlation of the two representations' condensed RDMs."""
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[0] != y.shape[0]:
        raise RowCountMismatchError("RDM comparison needs matching sample counts")
    return spearman(compute_rdm(x, kind).condensed, compute_rdm(y, kind).condensed)


def rdm_pearson(x, y, kind: str = "cosine") -> float:
    """Pearson correlation of the two representations' condensed RDMs."""
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[0] != y.shape[0]:
        raise RowCountMismatchError("RDM comparison needs matching sample counts")
    return pearson(compute_rdm(x, kind).condensed, compute_rdm(y, kind).condensed)


def _quantiles(v: np.ndarray, m: int) -> np.ndarray:
    if v.shape[0] == m:
        return np.sort(v)
    grid = (np.arange(m) + 0.5) / m
    return np.quantile(v, grid, method="linear")


def sliced_wasserstein(
    x, y, projections: int = 100, stream: RandomStream | None = None
) -> float:
    """Mean 1-D 2-Wasserstein distance over random unit projection directions.

    Equal sample counts compare sorted projections directly; unequal counts
    compare linearly interpolated quantiles on a max(n_x, n_y) grid.
    """
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[1] != y.shape[1]:
        raise DimMismatchError("sliced Wasserstein needs matching feature counts")
    stream = stream or RandomStream(320)
    d = x.shape[1]
    m = max(x.shape[0], y.shape[0])
    total = 0.0
    for p in range(projections):
        u = stream.substream(p).standard_normal(d)
        u /= np.linalg.norm(u)
        qx = _quantiles(x @ u, m)
        qy = _quantiles(y @ u, m)
        total += float(np.sqrt(np.mean((qx - qy) ** 2)))
    return total / projections


def mmd_rbf(x, y, bandwidth: float | None = None) -> float:
    """Unbiased MMD^2 with an RBF kernel (may be slightly negative).

    The default bandwidth is the median pairwise Euclidean distance over the
    pooled sample; the kernel is exp(-dist^2 / (2 bw^2)). Equal sample counts
    use the paired U-statistic (zero for identical samples); unequal counts
    use the general unbiased estimator.
    """
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[1] != y.shape[1]:
        raise DimMismatchError("MMD needs matching feature counts")
    m, n = x.shape[0], y.shape[0]
    if m < 2 or n < 2:
        raise TooFewSamplesError("MMD needs at least 2 samples per side")
    pooled = np.vstack([x, y])
    sq = np.einsum("ij,ij->i", pooled, pooled)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * pooled @ pooled.T, 0.0)
    if bandwidth is None:
        iu = np.triu_indices(pooled.shape[0], k=1)
        bandwidth = float(np.median(np.sqrt(d2[iu])))
    if bandwidth <= 0.0:
        raise DegenerateBandwidthError("median pairwise distance is zero")
    k = np.exp(-d2 / (2.0 * bandwidth**2))
    kxx = k[:m, :m]
    kyy = k[m:, m:]
    kxy = k[:m, m:]
    sum_xx = float(kxx.sum() - np.trace(kxx))
    sum_yy = float(kyy.sum() - np.trace(kyy))
    if m == n:
        sum_xy = float(kxy.sum() - np.trace(kxy))
        return (sum_xx + sum_yy - 2.0 * sum_xy) / (m * (m - 1))
    return sum_xx / (m * (m - 1)) + sum_yy / (n * (n - 1)) - 2.0 * float(kxy.mean())


def _principal_basis(x: np.ndarray, k: int) -> np.ndarray:
    xc = x - x.mean(axis=0)
    u, s, _ = np.linalg.svd(xc, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-12)) if s.size and s[0] > 0 else 0
    if k > rank:
        raise RankTooHighError(f"k={k} exceeds rank {rank}")
    return u[:, :k]


def subspace_overlap(x, y, k: int) -> float:
    """Mean squared cosine of principal angles between top-k sample subspaces."""
    x = as_embedding(x)
    y = as_embedding(y)
    if x.shape[0] != y.shape[0]:
        raise RowCountMismatchError("subspace overlap needs matching sample counts")
    ux = _principal_basis(x, k)
    uy = _principal_basis(y, k)
    cos = np.linalg.svd(ux.T @ uy, compute_uv=False)
    return float(np.mean(np.clip(cos, 0.0, 1.0) ** 2))


def eigenspectrum_similarity(x, y) -> float:
    """Cosine between the L1-normalized singular-value vectors.

    Spectra of different lengths are zero-padded to a common length.
    """
    x = as_embedding(x)
    y = as_embedding(y)
    sx = np.linalg.svd(x - x.mean(axis=0), compute_uv=False)
    sy = np.linalg.svd(y - y.mean(axis=0), compute_uv=False)
    m = max(sx.shape[0], sy.shape[0])
    sx = np.pad(sx, (0, m - sx.shape[0]))
    sy = np.pad(sy, (0, m - sy.shape[0]))
    tx, ty = float(sx.sum()), float(sy.sum())
    if tx <= 0.0 or ty <= 0.0:
        raise ZeroSpectrumError("zero singular-value spectrum")
    vx, vy = sx / tx, sy / ty
    return float(vx @ vy / (np.linalg.norm(vx) * np.linalg.norm(vy)))


def _covariance_eigenvalues(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=0)
    s = np.linalg.svd(xc, compute_uv=False)
    lam = s**2 / x.shape[0]
    if float(lam.sum()) <= 0.0:
        raise ZeroSpectrumError("zero covariance spectrum")
    return lam


def participation_ratio(x) -> float:
    """(sum lambda)^2 / sum lambda^2 over covariance eigenvalues."""
    lam = _covariance_eigenvalues(as_embedding(x))
    return float(lam.sum() ** 2 / np.sum(lam**2))


def effective_rank(x) -> float:
    """exp(entropy) of the normalized covariance eigenvalue distribution."""
    lam = _covariance_eigenvalues(as_embedding(x))
    p = lam / lam.sum()
    p = p[p > 0]
    return float(np.exp(-np.sum(p * np.log(p))))
