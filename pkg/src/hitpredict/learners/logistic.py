"""Binary logistic regression fit by full-batch gradient descent.

The trainer minimizes mean binary cross-entropy (equivalently maximizes the
Bernoulli likelihood): for probabilities p = sigmoid(Xw + b),

    loss  = -mean( y*log(p) + (1-y)*log(1-p) )
    dw    = X^T (p - y) / n        db = mean(p - y)

Weights start at zero, so the untrained model scores 0.5 everywhere. Inputs
are expected standardized (fit on the training rows); nothing enforces that
beyond the documented contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingleClassError, ValidationError
from .configs import LogisticConfig


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(probs: np.ndarray, y: np.ndarray, sample_weight: np.ndarray | None = None) -> float:
    """Mean binary cross-entropy with probabilities clipped away from {0, 1}."""
    p = np.clip(probs, 1e-12, 1.0 - 1e-12)
    terms = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    if sample_weight is None:
        return float(terms.mean())
    return float((terms * sample_weight).sum() / sample_weight.sum())


def class_weight_vector(y: np.ndarray, mode: str | None) -> np.ndarray:
    """Per-sample weights: all ones, or 'balanced' = n / (2 * class count)."""
    n = y.shape[0]
    if mode is None:
        return np.ones(n, dtype=np.float64)
    counts = np.bincount(y.astype(np.int64), minlength=2)
    weights = n / (2.0 * np.maximum(counts, 1))
    return weights[y.astype(np.int64)]


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray  # (n_features,)
    bias: float
    config: LogisticConfig
    n_features: int
    final_loss: float
    loss_history: tuple[float, ...]
    variant: str = "lr"

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        return sigmoid(X @ self.weights + self.bias)


def _check_matrix(X: np.ndarray, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValidationError(f"expected a matrix with {n_features} columns, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValidationError("feature matrix contains non-finite values")
    return X


def check_training_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValidationError("labels must be one-dimensional")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("labels must be 0 or 1")
    if y.min() == y.max():
        raise SingleClassError("training labels contain a single class")
    return y


def lr_gradients(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, sample_weight: np.ndarray
) -> tuple[np.ndarray, float]:
    """Analytic gradient of the (weighted) mean BCE wrt weights and bias."""
    p = sigmoid(X @ weights + bias)
    residual = (p - y) * sample_weight
    denom = sample_weight.sum()
    return X.T @ residual / denom, float(residual.sum() / denom)


def train_lr(X: np.ndarray, y, config: LogisticConfig | None = None) -> LogisticModel:
    config = config or LogisticConfig()
    y = check_training_labels(y)
    X = _check_matrix(X, np.asarray(X).shape[1])
    if X.shape[0] != y.shape[0]:
        raise ValidationError("X and y row counts differ")
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 rows to fit")

    sw = class_weight_vector(y.astype(np.int64), config.class_weight)
    weights = np.zeros(X.shape[1], dtype=np.float64)
    bias = 0.0
    history = [bce_loss(sigmoid(X @ weights + bias), y, sw)]
    for _ in range(config.n_iters):
        dw, db = lr_gradients(X, y, weights, bias, sw)
        weights = weights - config.learning_rate * dw
        bias = bias - config.learning_rate * db
        history.append(bce_loss(sigmoid(X @ weights + bias), y, sw))

    weights.setflags(write=False)
    return LogisticModel(
        weights=weights,
        bias=bias,
        config=config,
        n_features=X.shape[1],
        final_loss=history[-1],
        loss_history=tuple(history),
    )
