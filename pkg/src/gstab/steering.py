"""Linear probes, steering sweeps, and their negative controls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, SingleClassError, ZeroWeightsError
from .numerics import as_embedding
from .rng import RandomStream
from .stability import as_labels

DEFAULT_ALPHAS = tuple(np.arange(-2.0, 2.0 + 1e-9, 0.5))


@dataclass(frozen=True)
class LinearProbe:
    """A fitted logistic-regression probe.

    Binary problems use a single logit (weights shape (d,)); multiclass uses a
    softmax coefficient matrix (C, d). Training is deterministic: zero
    initialization and full-batch gradient descent with backtracking line
    search.
    """

    weights: np.ndarray
    bias: np.ndarray
    n_classes: int
    converged: bool
    n_iter: int

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.n_classes == 2:
            return x @ self.weights + self.bias[0]
        return x @ self.weights.T + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        scores = self.decision_values(x)
        if self.n_classes == 2:
            return (scores > 0).astype(np.int64)
        return np.argmax(scores, axis=1).astype(np.int64)

    def accuracy(self, x: np.ndarray, y: np.ndarray) -> float:
        y = np.asarray(y, dtype=np.int64)
        return float(np.mean(self.predict(x) == y))


def _binary_loss_grad(theta, x, y, l2):
    # loss = mean cross-entropy + l2 * ||w||^2 / (2n), the standard
    # inverse-regularization-strength-1 scaling; bias unpenalized
    n, d = x.shape
    w, b = theta[:d], theta[d]
    lam = l2 / n
    z = x @ w + b
    # log(1 + exp(-|z|)) formulation for numerical stability
    m = np.maximum(z, 0.0)
    loss = float(np.mean(m - z * y + np.log(np.exp(-m) + np.exp(z - m))))
    loss += 0.5 * lam * float(w @ w)
    p = 1.0 / (1.0 + np.exp(-z))
    resid = p - y
    grad = np.concatenate([x.T @ resid / n + lam * w, [resid.mean()]])
    return loss, grad


def _multi_loss_grad(theta, x, y_onehot, l2):
    n, d = x.shape
    c = y_onehot.shape[1]
    w = theta[: c * d].reshape(c, d)
    b = theta[c * d :]
    lam = l2 / n
    z = x @ w.T + b
    z -= z.max(axis=1, keepdims=True)
    expz = np.exp(z)
    p = expz / expz.sum(axis=1, keepdims=True)
    loss = float(-np.mean(np.log(np.maximum((p * y_onehot).sum(axis=1), 1e-300))))
    loss += 0.5 * lam * float(np.sum(w * w))
    resid = (p - y_onehot) / n
    grad_w = resid.T @ x + lam * w
    grad_b = resid.sum(axis=0)
    return loss, np.concatenate([grad_w.ravel(), grad_b])


def train_linear_probe(
    x_train,
    y_train,
    l2_penalty: float = 1.0,
    max_iter: int = 5000,
    grad_tol: float = 1e-6,
) -> LinearProbe:
    """Fit a logistic probe by deterministic gradient descent.

    Stops when the gradient norm falls below ``grad_tol`` or after
    ``max_iter`` iterations (the probe is still returned, flagged
    unconverged).
    """
    x = as_embedding(x_train)
    y = as_labels(y_train, x.shape[0])
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("probe features must be finite")
    n_classes = int(y.max()) + 1
    if n_classes < 2:
        raise SingleClassError("probe training needs at least 2 classes")
    n, d = x.shape
    if n_classes == 2:
        theta = np.zeros(d + 1)
        target = y.astype(np.float64)
        loss_grad = lambda t: _binary_loss_grad(t, x, target, l2_penalty)
    else:
        onehot = np.eye(n_classes)[y]
        theta = np.zeros(n_classes * d + n_classes)
        loss_grad = lambda t: _multi_loss_grad(t, x, onehot, l2_penalty)

    loss, grad = loss_grad(theta)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) <= grad_tol:
            converged = True
            break
        step = min(step * 2.0, 1e6)
        # Armijo backtracking on the steepest-descent step
        while True:
            cand = theta - step * grad
            cand_loss, cand_grad = loss_grad(cand)
            if cand_loss <= loss - 0.5 * step * gnorm2 or step < 1e-18:
                break
            step *= 0.5
        theta, loss, grad = cand, cand_loss, cand_grad
    else:
        converged = float(np.linalg.norm(grad)) <= grad_tol

    if n_classes == 2:
        weights = theta[:d]
        bias = theta[d:]
    else:
        weights = theta[: n_classes * d].reshape(n_classes, d)
        bias = theta[n_classes * d :]
    return LinearProbe(weights, bias, n_classes, converged, it)


def steering_direction(probe: LinearProbe) -> np.ndarray:
    """Unit steering direction from a fitted probe.

    Binary: the normalized weight vector. Multiclass: the first right singular
    vector of the coefficient matrix, sign fixed by making its
    largest-magnitude entry positive.
    """
    if probe.n_classes == 2:
        w = probe.weights
        norm = float(np.linalg.norm(w))
        if norm <= 1e-12:
            raise ZeroWeightsError("probe weights are zero")
        return w / norm
    _, s, vt = np.linalg.svd(probe.weights, full_matrices=False)
    if s[0] <= 1e-12:
        raise ZeroWeightsError("probe coefficient matrix is zero")
    v = vt[0]
    pivot = int(np.argmax(np.abs(v)))
    return v if v[pivot] >= 0 else -v


@dataclass(frozen=True)
class SteeringResult:
    alphas: tuple[float, ...]
    accuracies: tuple[float, ...]
    baseline_accuracy: float
    max_drop: float


def steering_sweep(
    probe: LinearProbe,
    x_test,
    y_test,
    direction: np.ndarray,
    alphas=DEFAULT_ALPHAS,
) -> SteeringResult:
    """Probe accuracy on ``x_test + alpha * direction`` across the alpha grid.

    ``max_drop`` is the unsteered accuracy minus the sweep minimum.
    """
    x = as_embedding(x_test)
    y = as_labels(y_test, x.shape[0])
    direction = np.asarray(direction, dtype=np.float64).ravel()
    baseline = probe.accuracy(x, y)
    accs = [probe.accuracy(x + a * direction, y) for a in alphas]
    return SteeringResult(
        alphas=tuple(float(a) for a in alphas),
        accuracies=tuple(accs),
        baseline_accuracy=baseline,
        max_drop=baseline - min(accs),
    )


def random_direction_drops(
    probe: LinearProbe,
    x_test,
    y_test,
    n_directions: int = 20,
    stream: RandomStream | None = None,
    alphas=DEFAULT_ALPHAS,
) -> float:
    """Mean max_drop over random unit directions (steering negative control)."""
    x = as_embedding(x_test)
    d = x.shape[1]
    stream = stream or RandomStream(320)
    drops = []
    for i in range(n_directions):
        u = stream.substream(i).standard_normal(d)
        u /= np.linalg.norm(u)
        drops.append(steering_sweep(probe, x_test, y_test, u, alphas).max_drop)
    return float(np.mean(drops))


def shuffled_label_control(x, y, metric_fn, stream: RandomStream | None = None):
    """Evaluate a supervised metric with permuted labels (negative control)."""
    x = as_embedding(x)
    y = as_labels(y, x.shape[0])
    stream = stream or RandomStream(320)
    permuted = y[stream.substream(0).permutation(y.shape[0])]
    return metric_fn(x, permuted)
