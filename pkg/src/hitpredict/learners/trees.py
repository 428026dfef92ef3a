"""CART binary trees: greedy Gini splitting, shared by the single tree and the forest.

Split candidates are the midpoints between consecutive distinct sorted values
of each candidate feature. Routing convention: x[feature] <= threshold goes
left. Internal nodes remember their absolute weighted impurity decrease so
ensemble feature importances can be read off the fitted structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..rng import SplitMix64

_GAIN_EPS = 1e-12


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children set) or leaf (value only).

    ``value`` is the class-1 probability for classification trees and the
    Newton leaf weight for boosted regression trees. ``gain`` is the split's
    contribution to feature importance; ``n_samples`` the rows that reached
    the node during training.
    """

    value: float
    n_samples: int
    feature: int | None = None
    threshold: float | None = None
    gain: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "gain": self.gain,
            "n": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeNode":
        if "feature" not in data:
            return cls(value=float(data["value"]), n_samples=int(data["n"]))
        return cls(
            value=0.0,
            n_samples=int(data["n"]),
            feature=int(data["feature"]),
            threshold=float(data["threshold"]),
            gain=float(data["gain"]),
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )


def tree_values(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Vectorized routing: the leaf value reached by each row."""
    out = np.empty(X.shape[0], dtype=np.float64)
    _route(node, X, np.arange(X.shape[0]), out)
    return out


def _route(node: TreeNode, X: np.ndarray, indices: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[indices] = node.value
        return
    go_left = X[indices, node.feature] <= node.threshold
    _route(node.left, X, indices[go_left], out)
    _route(node.right, X, indices[~go_left], out)


def gini_impurity(weight_pos: float, weight_total: float) -> float:
    """1 - p0^2 - p1^2 for a node with the given positive/total weights."""
    if weight_total <= 0:
        return 0.0
    p1 = weight_pos / weight_total
    p0 = 1.0 - p1
    return 1.0 - p0 * p0 - p1 * p1


def _best_gini_split(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    feature_ids: np.ndarray,
) -> tuple[float, int, float] | None:
    """Best (gain, feature, threshold) over candidates, or None if nothing splits.

    Gain is the absolute weighted decrease W*g(parent) - W_L*g(L) - W_R*g(R);
    ties keep the first candidate in feature order then threshold order. A
    zero-gain candidate is still returned: greedy lookahead-free splitting
    must pass through gain plateaus (two interleaved classes can need a
    gain-free first cut) and recursion still terminates because children
    strictly shrink.
    """
    w_total = float(w.sum())
    w_pos = float((w * y).sum())
    parent = w_total * gini_impurity(w_pos, w_total)

    best_gain = -np.inf
    best: tuple[float, int, float] | None = None
    for f in feature_ids:
        col = X[:, f]
        order = np.argsort(col, kind="mergesort")
        xs = col[order]
        ws = w[order]
        wy = ws * y[order]
        cut = np.nonzero(xs[:-1] != xs[1:])[0]  # split after position i
        if cut.size == 0:
            continue
        cw = np.cumsum(ws)
        cwy = np.cumsum(wy)
        wl = cw[cut]
        wl_pos = cwy[cut]
        wr = w_total - wl
        wr_pos = w_pos - wl_pos
        # Weighted child impurity, all candidates at once.
        pl = wl_pos / wl
        pr = wr_pos / wr
        children = wl * (1.0 - pl * pl - (1.0 - pl) ** 2) + wr * (1.0 - pr * pr - (1.0 - pr) ** 2)
        gains = parent - children
        k = int(np.argmax(gains))
        if gains[k] > best_gain + _GAIN_EPS:
            best_gain = float(gains[k])
            threshold = float((xs[cut[k]] + xs[cut[k] + 1]) / 2.0)
            best = (best_gain, int(f), threshold)
    return best


def build_cart(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    *,
    max_depth: int | None,
    min_samples_split: int,
    max_features: int | None = None,
    rng: SplitMix64 | None = None,
) -> TreeNode:
    """Grow a CART classification tree; leaf value = weighted class-1 fraction."""
    if X.shape[0] == 0:
        raise ValidationError("cannot grow a tree from empty data")
    if max_features is not None and rng is None:
        raise ValidationError("feature subsampling requires an rng")
    n_features = X.shape[1]

    def grow(indices: np.ndarray, depth: int) -> TreeNode:
        yi = y[indices]
        wi = sample_weight[indices]
        w_total = float(wi.sum())
        w_pos = float((wi * yi).sum())
        node = TreeNode(value=w_pos / w_total if w_total > 0 else 0.0, n_samples=int(indices.size))
        pure = w_pos == 0.0 or w_pos == w_total
        if (
            pure
            or indices.size < min_samples_split
            or (max_depth is not None and depth >= max_depth)
        ):
            return node
        if max_features is not None and max_features < n_features:
            feature_ids = np.array(sorted(rng.sample_indices(n_features, max_features)))
        else:
            feature_ids = np.arange(n_features)
        found = _best_gini_split(X[indices], yi, wi, feature_ids)
        if found is None:
            return node
        gain, feature, threshold = found
        go_left = X[indices, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.gain = max(gain, 0.0)  # plateau splits carry no importance mass
        node.left = grow(indices[go_left], depth + 1)
        node.right = grow(indices[~go_left], depth + 1)
        return node

    return grow(np.arange(X.shape[0]), 0)
