"""Feature importance for the tree ensembles.

Two views: mean decrease in impurity (Gini decrease for the forest, split
gain for the boosted trees) read off the fitted structure, and permutation
importance (mean weighted-F1 drop over seeded column shuffles) measured on a
dataset.
"""

from __future__ import annotations

import numpy as np

from ..dataset import FEATURE_COLUMNS
from ..errors import ValidationError
from ..metrics import confusion, weighted_metrics
from ..rng import SplitMix64, derive_seed
from .boosting import BoostedTreesModel
from .forest import RandomForestModel
from .trees import TreeNode

_PERM_STREAM = 0x9E12


def _ensemble_trees(model) -> tuple[TreeNode, ...]:
    if isinstance(model, RandomForestModel):
        return model.trees
    if isinstance(model, BoostedTreesModel):
        return model.trees
    raise ValidationError(f"feature importance needs a tree ensemble, got variant {model.variant!r}")


def _accumulate(node: TreeNode, acc: np.ndarray) -> None:
    if node.is_leaf:
        return
    acc[node.feature] += node.gain
    _accumulate(node.left, acc)
    _accumulate(node.right, acc)


def feature_importance(model) -> np.ndarray:
    """Per-feature impurity/gain share, normalized to sum to 1.

    An ensemble with no splits at all (pure training labels) has no signal to
    attribute, so every feature gets an equal share.
    """
    trees = _ensemble_trees(model)
    acc = np.zeros(model.n_features, dtype=np.float64)
    for tree in trees:
        _accumulate(tree, acc)
    total = acc.sum()
    if total <= 0.0:
        return np.full(model.n_features, 1.0 / model.n_features)
    return acc / total


def ranked_importance(model, feature_names=FEATURE_COLUMNS) -> list[tuple[str, float]]:
    """(name, share) pairs sorted most-important first."""
    shares = feature_importance(model)
    if len(feature_names) != len(shares):
        raise ValidationError("feature_names length must match the model's feature count")
    order = np.argsort(-shares, kind="mergesort")
    return [(feature_names[i], float(shares[i])) for i in order]


def _weighted_f1(model, X, y, threshold: float) -> float:
    preds = (model.scores(X) >= threshold).astype(np.int64)
    return weighted_metrics(confusion(y, preds)).f1


def permutation_importance(
    model,
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
    n_repeats: int = 5,
    threshold: float = 0.5,
) -> np.ndarray:
    """Mean weighted-F1 drop per feature over ``n_repeats`` seeded shuffles."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    baseline = _weighted_f1(model, X, y, threshold)
    drops = np.zeros(X.shape[1], dtype=np.float64)
    for feature in range(X.shape[1]):
        for repeat in range(n_repeats):
            rng = SplitMix64(derive_seed(seed, _PERM_STREAM, feature, repeat))
            order = list(range(X.shape[0]))
            rng.shuffle(order)
            shuffled = X.copy()
            shuffled[:, feature] = X[order, feature]
            drops[feature] += baseline - _weighted_f1(model, shuffled, y, threshold)
    return drops / n_repeats
