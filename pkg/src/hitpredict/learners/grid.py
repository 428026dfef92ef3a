"""Exhaustive hyperparameter search scored on a seeded held-out split."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..dataset import split_two_way, standardize_apply, standardize_fit
from ..errors import ValidationError
from ..metrics import confusion, weighted_metrics
from .configs import canonical_variant, make_config

HOLDOUT_FRACTION = 0.25  # 75% train / 25% evaluation inside the search


@dataclass(frozen=True)
class GridSearchResult:
    best_config: object
    best_score: float
    cells: tuple[tuple[object, float], ...]  # (config, weighted F1) per grid cell


def _needs_standardization(variant: str) -> bool:
    return variant in ("lr", "mlp")


def grid_search(
    variant: str,
    grid: Mapping[str, Sequence],
    X: np.ndarray,
    y: np.ndarray,
    seed: int,
) -> GridSearchResult:
    """Train every grid cell on 75% of the data, score weighted F1 on the rest.

    Cells are visited in lexicographic parameter-name order with values in
    their given order; ties on the score keep the first cell visited.
    """
    variant = canonical_variant(variant)
    if not grid:
        raise ValidationError("grid must contain at least one parameter")
    for name, values in grid.items():
        if not values:
            raise ValidationError(f"grid parameter {name!r} has no values")

    from . import train  # late import: avoids a cycle with the package root

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    parts = split_two_way(X.shape[0], seed, HOLDOUT_FRACTION)
    train_rows = np.array(parts.train)
    eval_rows = np.array(parts.test)
    X_train, y_train = X[train_rows], y[train_rows]
    X_eval, y_eval = X[eval_rows], y[eval_rows]
    if _needs_standardization(variant):
        params = standardize_fit(X_train)
        X_train = standardize_apply(params, X_train)
        X_eval = standardize_apply(params, X_eval)

    names = sorted(grid)
    cells = []
    best_idx = -1
    best_score = -np.inf
    for combo in itertools.product(*(list(grid[name]) for name in names)):
        config = make_config(variant, dict(zip(names, combo)), seed=seed)
        model = train(variant, X_train, y_train, config)
        preds = (model.scores(X_eval) >= config.hit_decision_threshold).astype(np.int64)
        score = weighted_metrics(confusion(y_eval, preds)).f1
        cells.append((config, float(score)))
        if score > best_score:
            best_score = float(score)
            best_idx = len(cells) - 1

    return GridSearchResult(
        best_config=cells[best_idx][0],
        best_score=best_score,
        cells=tuple(cells),
    )
