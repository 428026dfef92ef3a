"""Two-hidden-layer perceptron trained with mini-batch Adam on binary cross-entropy.

Architecture: input -> hidden1 (ReLU) -> hidden2 (ReLU) -> 1 (sigmoid).
Hidden weights use He-normal init, the output layer a small Glorot-style
scale; all draws come from the seeded package generator. Each epoch shuffles
the row order with a per-epoch derived stream, slices it into batches of
``batch_size`` (final partial batch included) and applies one Adam update
per batch with bias-corrected moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import SplitMix64, derive_seed
from .configs import MlpConfig
from .logistic import _check_matrix, bce_loss, check_training_labels, class_weight_vector, sigmoid

_INIT_STREAM = 0x311D
_SHUFFLE_STREAM = 0x5FFE

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


@dataclass(frozen=True)
class MlpModel:
    params: dict[str, np.ndarray]
    config: MlpConfig
    n_features: int
    final_loss: float
    variant: str = "mlp"

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        return forward(self.params, X)[-1]


def initial_params(config: MlpConfig, n_features: int) -> dict[str, np.ndarray]:
    rng = SplitMix64(derive_seed(config.seed, _INIT_STREAM))

    def normals(shape: tuple[int, int], scale: float) -> np.ndarray:
        flat = np.array([rng.normal() for _ in range(shape[0] * shape[1])])
        return (scale * flat).reshape(shape)

    h1, h2 = config.hidden1, config.hidden2
    return {
        "W1": normals((n_features, h1), np.sqrt(2.0 / n_features)),
        "b1": np.zeros(h1),
        "W2": normals((h1, h2), np.sqrt(2.0 / h1)),
        "b2": np.zeros(h2),
        "W3": normals((h2, 1), np.sqrt(1.0 / h2)),
        "b3": np.zeros(1),
    }


def forward(params: dict[str, np.ndarray], X: np.ndarray):
    """Returns (z1, a1, z2, a2, probs); intermediates feed backprop."""
    z1 = X @ params["W1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ params["W2"] + params["b2"]
    a2 = np.maximum(z2, 0.0)
    z3 = (a2 @ params["W3"] + params["b3"]).ravel()
    return z1, a1, z2, a2, sigmoid(z3)


def gradients(
    params: dict[str, np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Backprop gradients of the (weighted) mean BCE over the batch."""
    n = X.shape[0]
    if sample_weight is None:
        sample_weight = np.ones(n)
    z1, a1, z2, a2, p = forward(params, X)
    # dL/dz3 for BCE-of-sigmoid collapses to (p - y), one weight per row.
    dz3 = ((p - y) * sample_weight / sample_weight.sum())[:, None]
    grads = {
        "W3": a2.T @ dz3,
        "b3": dz3.sum(axis=0),
    }
    da2 = dz3 @ params["W3"].T
    dz2 = da2 * (z2 > 0.0)
    grads["W2"] = a1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    da1 = dz2 @ params["W2"].T
    dz1 = da1 * (z1 > 0.0)
    grads["W1"] = X.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return grads


def batch_loss(params, X, y, sample_weight=None) -> float:
    return bce_loss(forward(params, X)[-1], y, sample_weight)


def train_mlp(X, y, config: MlpConfig | None = None) -> MlpModel:
    config = config or MlpConfig()
    y = check_training_labels(y)
    X = np.asarray(X, dtype=np.float64)
    X = _check_matrix(X, X.shape[1])
    if X.shape[0] != y.shape[0]:
        raise ValidationError("X and y row counts differ")

    sw = class_weight_vector(y.astype(np.int64), config.class_weight)
    params = initial_params(config, X.shape[1])
    moment1 = {k: np.zeros_like(v) for k, v in params.items()}
    moment2 = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    n = X.shape[0]
    for epoch in range(config.epochs):
        order = list(range(n))
        SplitMix64(derive_seed(config.seed, _SHUFFLE_STREAM, epoch)).shuffle(order)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = gradients(params, X[batch], y[batch], sw[batch])
            step += 1
            for name in PARAM_NAMES:
                moment1[name] = config.beta1 * moment1[name] + (1.0 - config.beta1) * grads[name]
                moment2[name] = config.beta2 * moment2[name] + (1.0 - config.beta2) * grads[name] ** 2
                m_hat = moment1[name] / (1.0 - config.beta1**step)
                v_hat = moment2[name] / (1.0 - config.beta2**step)
                params[name] = params[name] - config.learning_rate * m_hat / (
                    np.sqrt(v_hat) + config.eps
                )

    for arr in params.values():
        arr.setflags(write=False)
    return MlpModel(
        params=params,
        config=config,
        n_features=X.shape[1],
        final_loss=batch_loss(params, X, y, sw),
    )
