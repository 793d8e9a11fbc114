"""Deterministic linear algebra, distance, and rank-statistics kernels.

All functions are pure: the same inputs (including seeds) produce bit-identical
outputs, which the validation suites rely on for byte-stable reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantColumnError,
    ConstantRowError,
    DegenerateError,
    LengthMismatchError,
    NonFiniteError,
    RankTooHighError,
    SingularCovarianceError,
    TooShortError,
    ZeroNormRowError,
)

DISTANCE_KINDS = ("cosine", "correlation", "euclidean")

ROW_NORM_EPS = 1e-12


def as_embedding(x) -> np.ndarray:
    """Validate and return an n x d float64 embedding matrix.

    Requires n >= 2, d >= 1 and all values finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise NonFiniteError(f"embedding matrix must be 2-D, got ndim={x.ndim}")
    n, d = x.shape
    if n < 2 or d < 1:
        raise TooShortError(f"embedding matrix needs n >= 2 and d >= 1, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("embedding matrix contains NaN or Inf")
    return x


@dataclass(frozen=True)
class Rdm:
    """Condensed pairwise dissimilarities (row-major upper triangle, i < j)."""

    n: int
    kind: str
    condensed: np.ndarray

    def __post_init__(self):
        expected = self.n * (self.n - 1) // 2
        if self.condensed.shape != (expected,):
            raise LengthMismatchError(
                f"condensed RDM for n={self.n} must have length {expected}"
            )


def _check_kind(kind: str) -> str:
    if kind not in DISTANCE_KINDS:
        raise ValueError(f"unknown distance kind {kind!r}; expected one of {DISTANCE_KINDS}")
    return kind


def _condensed_from_square(sq: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(sq.shape[0], k=1)
    return sq[iu]


def compute_rdm(x: np.ndarray, kind: str = "cosine") -> Rdm:
    """Pairwise dissimilarity vector of the rows of ``x``.

    cosine:      1 - <x_i, x_j> / (|x_i| |x_j|)
    correlation: 1 - Pearson(x_i, x_j) across features
    euclidean:   |x_i - x_j|
    """
    x = as_embedding(x)
    _check_kind(kind)
    n = x.shape[0]
    if kind == "euclidean":
        sq_norms = np.einsum("ij,ij->i", x, x)
        g = x @ x.T
        d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * g
        np.maximum(d2, 0.0, out=d2)
        return Rdm(n, kind, np.sqrt(_condensed_from_square(d2)))
    if kind == "correlation":
        xc = x - x.mean(axis=1, keepdims=True)
        norms = np.linalg.norm(xc, axis=1)
        if np.any(norms <= ROW_NORM_EPS):
            bad = int(np.argmax(norms <= ROW_NORM_EPS))
            raise ConstantRowError(f"row {bad} is constant; correlation distance undefined")
        xn = xc / norms[:, None]
    else:
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms <= ROW_NORM_EPS):
            bad = int(np.argmax(norms <= ROW_NORM_EPS))
            raise ZeroNormRowError(f"row {bad} has near-zero norm; cosine distance undefined")
        xn = x / norms[:, None]
    g = np.clip(xn @ xn.T, -1.0, 1.0)
    return Rdm(n, kind, 1.0 - _condensed_from_square(g))


def average_ranks(v: np.ndarray) -> np.ndarray:
    """Fractional (average) ranks, 1-based; ties share the mean rank."""
    # tied values all receive the group mean, so sort stability is irrelevant
    v = np.asarray(v, dtype=np.float64).ravel()
    order = np.argsort(v)
    sv = v[order]
    new_group = np.empty(v.shape[0], dtype=bool)
    new_group[0] = True
    np.not_equal(sv[1:], sv[:-1], out=new_group[1:])
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    starts = np.concatenate(([0], np.cumsum(counts[:-1])))
    ranks = np.empty(v.shape[0])
    ranks[order] = (starts + (counts + 1) / 2.0)[group]
    return ranks


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise LengthMismatchError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 3:
        raise TooShortError("correlation needs at least 3 observations")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteError("correlation inputs must be finite")
    return a, b


def pearson(a, b) -> float:
    """Pearson correlation; raises Degenerate on constant input."""
    a, b = _check_pair(a, b)
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va <= 0.0 or vb <= 0.0:
        raise DegenerateError("constant vector has undefined correlation")
    r = float(da @ db) / np.sqrt(va * vb)
    return float(min(1.0, max(-1.0, r)))


def spearman(a, b) -> float:
    """Spearman rank correlation with average ranks for ties."""
    a, b = _check_pair(a, b)
    return pearson(average_ranks(a), average_ranks(b))


def center_columns(x: np.ndarray) -> np.ndarray:
    """Subtract each column's mean."""
    x = as_embedding(x)
    return x - x.mean(axis=0, keepdims=True)


def zscore_columns(x: np.ndarray) -> np.ndarray:
    """Center columns and scale each to unit population standard deviation."""
    x = as_embedding(x)
    std = x.std(axis=0)
    if np.any(std <= 0.0):
        bad = int(np.argmax(std <= 0.0))
        raise ConstantColumnError(f"column {bad} is constant; z-score undefined")
    return (x - x.mean(axis=0, keepdims=True)) / std


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm."""
    x = as_embedding(x)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms <= ROW_NORM_EPS):
        bad = int(np.argmax(norms <= ROW_NORM_EPS))
        raise ZeroNormRowError(f"row {bad} has near-zero norm")
    return x / norms[:, None]


def _signed_svd(xc: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD with each component's largest-magnitude loading forced positive."""
    u, s, vt = np.linalg.svd(xc, full_matrices=False)
    for j in range(vt.shape[0]):
        pivot = int(np.argmax(np.abs(vt[j])))
        if vt[j, pivot] < 0.0:
            vt[j] = -vt[j]
            u[:, j] = -u[:, j]
    return u, s, vt


def pca(x: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k principal-component scores and singular values.

    Computed by SVD of the column-centered matrix; component signs are fixed
    by making the largest-magnitude loading of each component positive.
    """
    x = as_embedding(x)
    n, d = x.shape
    if k < 1 or k > min(n - 1, d):
        raise RankTooHighError(f"k={k} exceeds min(n-1, d)={min(n - 1, d)}")
    u, s, _ = _signed_svd(x - x.mean(axis=0, keepdims=True))
    return u[:, :k] * s[:k], s[:k].copy()


def zca_whitening_transform(x: np.ndarray, shrinkage: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Fit a ZCA whitening transform; returns (column means, whitening matrix).

    Covariance uses divisor n and is shrunk toward isotropy:
    sigma_lambda = (1 - lambda) * sigma + lambda * (tr(sigma) / d) * I.
    """
    x = as_embedding(x)
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError("shrinkage must lie in [0, 1]")
    n, d = x.shape
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / n
    trace = float(np.trace(cov))
    if trace <= 0.0:
        raise SingularCovarianceError("zero covariance; whitening undefined")
    cov = (1.0 - shrinkage) * cov + shrinkage * (trace / d) * np.eye(d)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] <= eigvals[-1] * 1e-12:
        raise SingularCovarianceError(
            "covariance is rank-deficient; use shrinkage > 0"
        )
    w = (eigvecs * (1.0 / np.sqrt(eigvals))) @ eigvecs.T
    return mean, w


def zca_whiten(x: np.ndarray, shrinkage: float = 0.0) -> np.ndarray:
    """Center ``x`` and apply the shrunk ZCA whitening transform."""
    mean, w = zca_whitening_transform(x, shrinkage)
    return (np.asarray(x, dtype=np.float64) - mean) @ w


def random_orthogonal(dim: int, gen: np.random.Generator) -> np.ndarray:
    """Random orthogonal matrix via QR with the R diagonal forced positive."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = gen.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs[None, :]
