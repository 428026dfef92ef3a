"""Hyperparameter containers for the five model variants.

Defaults are the documented training recipe: only override what an
experiment actually varies. Every config carries the seed that drives all
randomness for its trainer and the decision threshold used by ``predict``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from ..errors import ValidationError

CLASS_WEIGHT_CHOICES = (None, "balanced")


def _check_common(config) -> None:
    if not 0.0 < config.hit_decision_threshold < 1.0:
        raise ValidationError(
            f"hit_decision_threshold must lie in (0, 1), got {config.hit_decision_threshold!r}"
        )
    if config.class_weight not in CLASS_WEIGHT_CHOICES:
        raise ValidationError(f"class_weight must be one of {CLASS_WEIGHT_CHOICES}")


def _check_positive(config, *names: str) -> None:
    for name in names:
        value = getattr(config, name)
        if not value > 0:
            raise ValidationError(f"{name} must be > 0, got {value!r}")


def _check_count(config, *names: str) -> None:
    for name in names:
        value = getattr(config, name)
        if not isinstance(value, int) or value < 1:
            raise ValidationError(f"{name} must be an integer >= 1, got {value!r}")


@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float = 0.1
    n_iters: int = 1000
    seed: int = 0
    hit_decision_threshold: float = 0.5
    class_weight: str | None = None

    def __post_init__(self):
        _check_count(self, "n_iters")
        _check_positive(self, "learning_rate")
        _check_common(self)


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_split: int = 2
    seed: int = 0
    hit_decision_threshold: float = 0.5
    class_weight: str | None = None

    def __post_init__(self):
        _check_count(self, "min_samples_split")
        if self.max_depth is not None and (not isinstance(self.max_depth, int) or self.max_depth < 1):
            raise ValidationError(f"max_depth must be None or an integer >= 1, got {self.max_depth!r}")
        _check_common(self)


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    bootstrap: bool = True
    max_features: int | None = 4  # ceil(sqrt(13)) for the 13-feature schema
    seed: int = 0
    hit_decision_threshold: float = 0.5
    class_weight: str | None = None

    def __post_init__(self):
        _check_count(self, "n_estimators", "min_samples_split")
        if self.max_depth is not None and (not isinstance(self.max_depth, int) or self.max_depth < 1):
            raise ValidationError(f"max_depth must be None or an integer >= 1, got {self.max_depth!r}")
        if self.max_features is not None and (
            not isinstance(self.max_features, int) or self.max_features < 1
        ):
            raise ValidationError(
                f"max_features must be None or an integer >= 1, got {self.max_features!r}"
            )
        _check_common(self)


@dataclass(frozen=True)
class BoostConfig:
    n_estimators: int = 100  # 0 is allowed: a prior-only model scoring the base rate
    learning_rate: float = 0.3  # shrinkage per round
    reg_lambda: float = 1.0  # L2 penalty on leaf values
    gamma: float = 0.0  # minimum gain to accept a split
    max_depth: int = 6
    min_child_weight: float = 1.0  # minimum hessian sum per child
    seed: int = 0
    hit_decision_threshold: float = 0.5
    class_weight: str | None = None

    def __post_init__(self):
        if not isinstance(self.n_estimators, int) or self.n_estimators < 0:
            raise ValidationError(f"n_estimators must be an integer >= 0, got {self.n_estimators!r}")
        _check_count(self, "max_depth")
        _check_positive(self, "learning_rate")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise ValidationError("reg_lambda, gamma and min_child_weight must be >= 0")
        _check_common(self)


@dataclass(frozen=True)
class MlpConfig:
    hidden1: int = 16
    hidden2: int = 8
    batch_size: int = 8
    epochs: int = 10
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    hit_decision_threshold: float = 0.5
    class_weight: str | None = None

    def __post_init__(self):
        _check_count(self, "hidden1", "hidden2", "batch_size", "epochs")
        _check_positive(self, "learning_rate", "eps")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValidationError("Adam betas must lie in [0, 1)")
        _check_common(self)


CONFIG_TYPES = {
    "lr": LogisticConfig,
    "dt": TreeConfig,
    "rf": ForestConfig,
    "gbt": BoostConfig,
    "mlp": MlpConfig,
}

# Aliases accepted at API boundaries (CLI flags, grid search, serialization).
VARIANT_ALIASES = {
    "lr": "lr",
    "dt": "dt",
    "rf": "rf",
    "gbt": "gbt",
    "xgb": "gbt",
    "mlp": "mlp",
    "nn": "mlp",
}


def canonical_variant(name: str) -> str:
    key = name.lower()
    if key not in VARIANT_ALIASES:
        raise ValidationError(f"unknown model variant {name!r}; expected one of {sorted(VARIANT_ALIASES)}")
    return VARIANT_ALIASES[key]


def make_config(variant: str, overrides: dict | None = None, *, seed: int | None = None):
    """Build a variant config from keyword overrides (unknown keys rejected)."""
    cls = CONFIG_TYPES[canonical_variant(variant)]
    kwargs = dict(overrides or {})
    if seed is not None:
        kwargs["seed"] = seed
    valid = {f.name for f in fields(cls)}
    unknown = sorted(set(kwargs) - valid)
    if unknown:
        raise ValidationError(f"unknown hyperparameter(s) for {variant}: {unknown}")
    return cls(**kwargs)


def config_to_dict(config) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}
