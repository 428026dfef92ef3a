"""Five classifiers behind one interface: train(variant, X, y, config) -> model.

Every model exposes ``scores(X) -> probabilities in [0, 1]`` and carries its
``variant`` tag, ``config`` and ``n_features``. ``score``/``predict`` wrap a
single feature vector. LR and MLP expect standardized inputs (fit on the
training rows); the tree models consume raw features.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .boosting import BoostedTreesModel, train_gbt
from .configs import (
    BoostConfig,
    ForestConfig,
    LogisticConfig,
    MlpConfig,
    TreeConfig,
    canonical_variant,
    config_to_dict,
    make_config,
)
from .forest import DecisionTreeModel, RandomForestModel, train_dt, train_rf
from .grid import GridSearchResult, grid_search
from .importance import feature_importance, permutation_importance, ranked_importance
from .logistic import LogisticModel, train_lr
from .mlp import MlpModel, train_mlp
from .serialize import SavedModel, load_model, model_to_dict, save_model

__all__ = [
    "BoostConfig",
    "BoostedTreesModel",
    "DecisionTreeModel",
    "ForestConfig",
    "GridSearchResult",
    "LogisticConfig",
    "LogisticModel",
    "MlpConfig",
    "MlpModel",
    "RandomForestModel",
    "SavedModel",
    "TreeConfig",
    "canonical_variant",
    "config_to_dict",
    "feature_importance",
    "grid_search",
    "load_model",
    "make_config",
    "model_to_dict",
    "permutation_importance",
    "predict",
    "ranked_importance",
    "save_model",
    "score",
    "train",
    "train_dt",
    "train_gbt",
    "train_lr",
    "train_mlp",
    "train_rf",
]

_TRAINERS = {
    "lr": train_lr,
    "dt": train_dt,
    "rf": train_rf,
    "gbt": train_gbt,
    "mlp": train_mlp,
}


def train(variant: str, X, y, config=None):
    """Dispatch to the variant's trainer ('xgb' and 'nn' are accepted aliases)."""
    return _TRAINERS[canonical_variant(variant)](X, y, config)


def _as_single_row(model, x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.shape[0] != model.n_features:
        raise ValidationError(
            f"expected a vector with {model.n_features} entries, got {arr.shape[0]}"
        )
    if not np.isfinite(arr).all():
        raise ValidationError("feature vector contains non-finite values")
    return arr.reshape(1, -1)


def score(model, x) -> float:
    """Probability of class 1 for a single feature vector."""
    return float(model.scores(_as_single_row(model, x))[0])


def predict(model, x, threshold: float | None = None) -> int:
    """1 iff score >= threshold (default: the model's configured threshold)."""
    if threshold is None:
        threshold = model.config.hit_decision_threshold
    return int(score(model, x) >= threshold)


def predict_batch(model, X, threshold: float | None = None) -> np.ndarray:
    if threshold is None:
        threshold = model.config.hit_decision_threshold
    return (model.scores(X) >= threshold).astype(np.int64)
