"""Versioned JSON serialization for trained models.

A model document carries the variant tag, its full config, the fitted
parameters and (when the variant trains on standardized inputs) the
standardization constants, plus optional training metadata the CLI uses to
reconstruct splits. JSON floats round-trip exactly in Python, so a loaded
model scores bit-identically to the saved one.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import StandardizationParams
from ..errors import SchemaError
from .boosting import BoostedTreesModel
from .configs import CONFIG_TYPES, config_to_dict
from .forest import DecisionTreeModel, RandomForestModel
from .logistic import LogisticModel
from .mlp import MlpModel
from .trees import TreeNode

FORMAT_VERSION = 1


@dataclass(frozen=True)
class SavedModel:
    model: object
    standardization: StandardizationParams | None
    training_meta: dict


def _params_dict(model) -> dict:
    if isinstance(model, LogisticModel):
        return {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "final_loss": model.final_loss,
        }
    if isinstance(model, DecisionTreeModel):
        return {"tree": model.root.to_dict()}
    if isinstance(model, RandomForestModel):
        return {"trees": [t.to_dict() for t in model.trees]}
    if isinstance(model, BoostedTreesModel):
        return {
            "init_score": model.init_score,
            "trees": [t.to_dict() for t in model.trees],
            "train_loss_history": list(model.train_loss_history),
        }
    if isinstance(model, MlpModel):
        return {
            "layers": {name: arr.tolist() for name, arr in model.params.items()},
            "final_loss": model.final_loss,
        }
    raise SchemaError(f"cannot serialize model of type {type(model).__name__}")


def model_to_dict(
    model,
    standardization: StandardizationParams | None = None,
    training_meta: dict | None = None,
) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "variant": model.variant,
        "n_features": model.n_features,
        "config": config_to_dict(model.config),
        "params": _params_dict(model),
        "standardization": (
            None
            if standardization is None
            else {"mean": list(standardization.mean), "std": list(standardization.std)}
        ),
        "training": training_meta or {},
    }


def _model_from_dict(data: dict):
    variant = data["variant"]
    config = CONFIG_TYPES[variant](**data["config"])
    n_features = int(data["n_features"])
    params = data["params"]
    if variant == "lr":
        weights = np.asarray(params["weights"], dtype=np.float64)
        weights.setflags(write=False)
        return LogisticModel(
            weights=weights,
            bias=float(params["bias"]),
            config=config,
            n_features=n_features,
            final_loss=float(params["final_loss"]),
            loss_history=(),
        )
    if variant == "dt":
        return DecisionTreeModel(
            root=TreeNode.from_dict(params["tree"]), config=config, n_features=n_features
        )
    if variant == "rf":
        return RandomForestModel(
            trees=tuple(TreeNode.from_dict(t) for t in params["trees"]),
            config=config,
            n_features=n_features,
        )
    if variant == "gbt":
        return BoostedTreesModel(
            init_score=float(params["init_score"]),
            trees=tuple(TreeNode.from_dict(t) for t in params["trees"]),
            config=config,
            n_features=n_features,
            train_loss_history=tuple(params.get("train_loss_history", ())),
        )
    if variant == "mlp":
        layers = {}
        for name, values in params["layers"].items():
            arr = np.asarray(values, dtype=np.float64)
            arr.setflags(write=False)
            layers[name] = arr
        return MlpModel(
            params=layers,
            config=config,
            n_features=n_features,
            final_loss=float(params["final_loss"]),
        )
    raise SchemaError(f"unknown model variant {variant!r} in model file")


def save_model(
    model,
    path: str | Path,
    standardization: StandardizationParams | None = None,
    training_meta: dict | None = None,
) -> None:
    doc = model_to_dict(model, standardization, training_meta)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def load_model(path: str | Path) -> SavedModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", path=str(path)) from exc
    if data.get("format_version") != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported model format_version {data.get('format_version')!r}", path=str(path)
        )
    std = None
    if data.get("standardization") is not None:
        block = data["standardization"]
        std = StandardizationParams(mean=tuple(block["mean"]), std=tuple(block["std"]))
    try:
        model = _model_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model document: {exc}", path=str(path)) from exc
    return SavedModel(model=model, standardization=std, training_meta=data.get("training", {}))
