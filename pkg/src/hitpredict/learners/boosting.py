"""Gradient boosted trees with second-order (Newton) steps on logistic loss.

Round structure:

* the ensemble starts from the base-rate log-odds f0 = log(pbar/(1-pbar));
* each round computes per-row gradients g = p - y and hessians h = p(1-p)
  of the logistic loss at the current scores, then fits a regression tree:
  a split's quality is

      gain = 1/2 * [ GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda) ] - gamma

  over exhaustive midpoint candidates, accepted only when gain > 0 and both
  children keep a hessian sum >= min_child_weight; each leaf outputs the
  Newton step -G/(H+lambda);
* raw scores accumulate learning_rate * tree(x); probabilities are the
  sigmoid of the accumulated raw score.

Leaf values are stored unscaled; shrinkage is applied at accumulation time,
both in training and in scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .configs import BoostConfig
from .logistic import _check_matrix, bce_loss, check_training_labels, class_weight_vector, sigmoid
from .trees import TreeNode, tree_values


@dataclass(frozen=True)
class BoostedTreesModel:
    init_score: float  # log-odds of the training base rate
    trees: tuple[TreeNode, ...]
    config: BoostConfig
    n_features: int
    train_loss_history: tuple[float, ...]  # logloss after init and each round
    variant: str = "gbt"

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        raw = np.full(X.shape[0], self.init_score, dtype=np.float64)
        for tree in self.trees:
            raw += self.config.learning_rate * tree_values(tree, X)
        return raw

    def scores(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_scores(X))


def _leaf_value(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    return -g_sum / (h_sum + reg_lambda)


def _half_score(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    return g_sum * g_sum / (h_sum + reg_lambda)


def _best_newton_split(
    X: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: BoostConfig
) -> tuple[float, int, float] | None:
    g_total = float(g.sum())
    h_total = float(h.sum())
    parent_score = _half_score(g_total, h_total, cfg.reg_lambda)

    best_gain = 0.0
    best: tuple[float, int, float] | None = None
    for f in range(X.shape[1]):
        col = X[:, f]
        order = np.argsort(col, kind="mergesort")
        xs = col[order]
        cut = np.nonzero(xs[:-1] != xs[1:])[0]
        if cut.size == 0:
            continue
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        gl = cg[cut]
        hl = ch[cut]
        gr = g_total - gl
        hr = h_total - hl
        gains = 0.5 * (
            gl * gl / (hl + cfg.reg_lambda)
            + gr * gr / (hr + cfg.reg_lambda)
            - parent_score
        ) - cfg.gamma
        gains = np.where(
            (hl >= cfg.min_child_weight) & (hr >= cfg.min_child_weight), gains, -np.inf
        )
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best = (best_gain, f, float((xs[cut[k]] + xs[cut[k] + 1]) / 2.0))
    return best


def _grow_newton_tree(
    X: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: BoostConfig, indices: np.ndarray, depth: int
) -> TreeNode:
    g_sum = float(g[indices].sum())
    h_sum = float(h[indices].sum())
    node = TreeNode(
        value=_leaf_value(g_sum, h_sum, cfg.reg_lambda), n_samples=int(indices.size)
    )
    if depth >= cfg.max_depth or indices.size < 2:
        return node
    found = _best_newton_split(X[indices], g[indices], h[indices], cfg)
    if found is None:
        return node
    gain, feature, threshold = found
    go_left = X[indices, feature] <= threshold
    node.feature = feature
    node.threshold = threshold
    node.gain = gain
    node.left = _grow_newton_tree(X, g, h, cfg, indices[go_left], depth + 1)
    node.right = _grow_newton_tree(X, g, h, cfg, indices[~go_left], depth + 1)
    return node


def train_gbt(X, y, config: BoostConfig | None = None) -> BoostedTreesModel:
    cfg = config or BoostConfig()
    y = check_training_labels(y)
    X = np.asarray(X, dtype=np.float64)
    X = _check_matrix(X, X.shape[1])
    if X.shape[0] != y.shape[0]:
        raise ValidationError("X and y row counts differ")

    sw = class_weight_vector(y.astype(np.int64), cfg.class_weight)
    base_rate = float((sw * y).sum() / sw.sum())
    init_score = math.log(base_rate / (1.0 - base_rate))
    raw = np.full(X.shape[0], init_score, dtype=np.float64)
    history = [bce_loss(sigmoid(raw), y, sw)]

    trees: list[TreeNode] = []
    all_rows = np.arange(X.shape[0])
    for _ in range(cfg.n_estimators):
        p = sigmoid(raw)
        g = (p - y) * sw
        h = p * (1.0 - p) * sw
        root = _grow_newton_tree(X, g, h, cfg, all_rows, 0)
        trees.append(root)
        raw += cfg.learning_rate * tree_values(root, X)
        history.append(bce_loss(sigmoid(raw), y, sw))

    return BoostedTreesModel(
        init_score=init_score,
        trees=tuple(trees),
        config=cfg,
        n_features=X.shape[1],
        train_loss_history=tuple(history),
    )
