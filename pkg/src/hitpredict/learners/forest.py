"""Single CART classifier and the bootstrap-aggregated forest built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import SplitMix64, derive_seed
from .configs import ForestConfig, TreeConfig
from .logistic import _check_matrix, class_weight_vector
from .trees import TreeNode, build_cart, tree_values

_TREE_STREAM = 0x7E3E


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    config: TreeConfig
    n_features: int
    variant: str = "dt"

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Leaf class-1 probability for each row."""
        return tree_values(self.root, _check_matrix(X, self.n_features))


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[TreeNode, ...]
    config: ForestConfig
    n_features: int
    variant: str = "rf"

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Fraction of trees voting class 1 (a tree votes by leaf prob >= 0.5)."""
        X = _check_matrix(X, self.n_features)
        votes = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            votes += tree_values(tree, X) >= 0.5
        return votes / len(self.trees)


def _prepare(X, y):
    X = np.asarray(X, dtype=np.float64)
    X = _check_matrix(X, X.shape[1])
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise ValidationError("X and y row counts differ")
    if y.size == 0:
        raise ValidationError("cannot train on empty data")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("labels must be 0 or 1")
    return X, y


def train_dt(X, y, config: TreeConfig | None = None) -> DecisionTreeModel:
    config = config or TreeConfig()
    X, y = _prepare(X, y)
    weights = class_weight_vector(y.astype(np.int64), config.class_weight)
    root = build_cart(
        X,
        y,
        weights,
        max_depth=config.max_depth,
        min_samples_split=config.min_samples_split,
    )
    return DecisionTreeModel(root=root, config=config, n_features=X.shape[1])


def train_rf(X, y, config: ForestConfig | None = None) -> RandomForestModel:
    """n_estimators trees, each on a seeded bootstrap with feature subsampling.

    Tree i draws from an rng derived from (seed, i), so forests are
    reproducible and trees could be fitted in any order (or in parallel)
    without changing the result.
    """
    config = config or ForestConfig()
    X, y = _prepare(X, y)
    n = X.shape[0]
    weights = class_weight_vector(y.astype(np.int64), config.class_weight)
    max_features = config.max_features
    if max_features is not None:
        max_features = min(max_features, X.shape[1])

    trees = []
    for i in range(config.n_estimators):
        rng = SplitMix64(derive_seed(config.seed, _TREE_STREAM, i))
        if config.bootstrap:
            rows = np.array([rng.randint(n) for _ in range(n)])
        else:
            rows = np.arange(n)
        trees.append(
            build_cart(
                X[rows],
                y[rows],
                weights[rows],
                max_depth=config.max_depth,
                min_samples_split=config.min_samples_split,
                max_features=max_features,
                rng=rng if max_features is not None else None,
            )
        )
    return RandomForestModel(trees=tuple(trees), config=config, n_features=X.shape[1])
