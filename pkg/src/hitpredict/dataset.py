"""Canonical data model: track records, hit labeling, dedup, splits, scaling.

Column order is fixed package-wide: every feature matrix has the 13 columns
of :data:`FEATURE_COLUMNS` in exactly that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ValidationError
from .rng import SplitMix64, derive_seed

FEATURE_COLUMNS: tuple[str, ...] = (
    "danceability",
    "energy",
    "key",
    "loudness",
    "mode",
    "speechiness",
    "acousticness",
    "instrumentalness",
    "liveness",
    "valence",
    "tempo",
    "duration_ms",
    "time_signature",
)

RECORD_COLUMNS: tuple[str, ...] = (
    "track_id",
    "title",
    "artist",
    "release_year",
    "popularity",
) + FEATURE_COLUMNS

DEFAULT_HIT_THRESHOLD = 47

# Feature names whose values must sit inside the closed unit interval.
_UNIT_FEATURES = (
    "danceability",
    "energy",
    "speechiness",
    "acousticness",
    "instrumentalness",
    "liveness",
    "valence",
)

_SPLIT_STREAM = 0x5F11


@dataclass(frozen=True)
class TrackRecord:
    """One track: identity, popularity and the 13 audio features."""

    track_id: str
    title: str
    artist: str
    release_year: int | None  # None = unknown
    popularity: int
    danceability: float
    energy: float
    key: int
    loudness: float
    mode: int
    speechiness: float
    acousticness: float
    instrumentalness: float
    liveness: float
    valence: float
    tempo: float
    duration_ms: int
    time_signature: int

    def __post_init__(self):
        if not self.track_id:
            raise ValidationError("track_id must be non-empty")
        if not isinstance(self.popularity, int) or not 0 <= self.popularity <= 100:
            raise ValidationError(
                f"popularity must be an integer in [0, 100], got {self.popularity!r}"
            )
        if self.release_year is not None and self.release_year < 1900:
            raise ValidationError(f"release_year must be >= 1900, got {self.release_year!r}")
        if self.mode not in (0, 1):
            raise ValidationError(f"mode must be 0 or 1, got {self.mode!r}")
        if not isinstance(self.key, int) or not -1 <= self.key <= 11:
            raise ValidationError(f"key must be an integer in [-1, 11], got {self.key!r}")
        for name in _UNIT_FEATURES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.tempo > 0:
            raise ValidationError(f"tempo must be > 0, got {self.tempo!r}")
        if not isinstance(self.duration_ms, int) or self.duration_ms <= 0:
            raise ValidationError(f"duration_ms must be a positive integer, got {self.duration_ms!r}")
        if not isinstance(self.time_signature, int) or self.time_signature < 0:
            raise ValidationError(
                f"time_signature must be a non-negative integer, got {self.time_signature!r}"
            )

    def feature_vector(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in FEATURE_COLUMNS)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix + binary labels in the fixed column order."""

    features: np.ndarray  # (n, 13) float64
    labels: np.ndarray  # (n,) int64, values in {0, 1}
    schema_version: int = 1
    source: str = ""

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels)
        if feats.ndim != 2 or feats.shape[1] != len(FEATURE_COLUMNS):
            raise ValidationError(
                f"feature matrix must have {len(FEATURE_COLUMNS)} columns, got shape {feats.shape}"
            )
        if labs.shape != (feats.shape[0],):
            raise ValidationError("labels must be one per feature row")
        if labs.size and not np.isin(labs, (0, 1)).all():
            raise ValidationError("labels must be 0 or 1")
        feats.setflags(write=False)
        labs = labs.astype(np.int64)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SplitIndices:
    """Seeded partition of row indices into train/validation/test."""

    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self):
        parts = (self.train, self.validation, self.test)
        n = sum(len(p) for p in parts)
        seen: set[int] = set()
        for part in parts:
            seen.update(part)
        if len(seen) != n or seen != set(range(n)):
            raise ValidationError("split parts must exactly partition range(n)")

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.validation), len(self.test))


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column mean and standard deviation fitted on training rows."""

    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self):
        if len(self.mean) != len(self.std):
            raise ValidationError("mean and std must have equal length")
        if any(not s > 0 for s in self.std):
            raise ValidationError("every stored standard deviation must be > 0")


def label_hit(popularity: int, threshold: int = DEFAULT_HIT_THRESHOLD) -> int:
    """1 iff popularity strictly exceeds the threshold; the threshold itself is a non-hit."""
    if not 0 <= popularity <= 100:
        raise ValidationError(f"popularity must lie in [0, 100], got {popularity!r}")
    return 1 if popularity > threshold else 0


def _normalized_title_artist(record: TrackRecord) -> tuple[str, str]:
    return (" ".join(record.title.casefold().split()), " ".join(record.artist.casefold().split()))


def deduplicate(records: list[TrackRecord]) -> list[TrackRecord]:
    """Drop exact track_id duplicates, then collapse (title, artist) clashes.

    Within a normalized (title, artist) group only the most popular record
    survives; popularity ties keep the earliest-seen record. Survivors stay
    in their original relative order.
    """
    by_id: dict[str, int] = {}
    unique: list[TrackRecord] = []
    for record in records:
        if record.track_id not in by_id:
            by_id[record.track_id] = len(unique)
            unique.append(record)

    best: dict[tuple[str, str], int] = {}
    for pos, record in enumerate(unique):
        key = _normalized_title_artist(record)
        if key not in best or record.popularity > unique[best[key]].popularity:
            best[key] = pos
    keep = sorted(best.values())
    return [unique[pos] for pos in keep]


def round_half_up(x: float) -> int:
    """Round to nearest integer with .5 going up (3.5 -> 4, 2.5 -> 3)."""
    return int(math.floor(x + 0.5))


def _shuffled_indices(n_rows: int, seed: int) -> list[int]:
    indices = list(range(n_rows))
    SplitMix64(derive_seed(seed, _SPLIT_STREAM)).shuffle(indices)
    return indices


def _stratified_order(labels: np.ndarray, seed: int) -> list[int]:
    """Shuffle within each class, then interleave classes proportionally.

    Walking a proportionally interleaved order and cutting it at the same
    offsets as the unstratified split keeps each part's class mix within one
    row of the global rate.
    """
    labels = np.asarray(labels)
    order = _shuffled_indices(len(labels), seed)
    pools: dict[int, list[int]] = {0: [], 1: []}
    for idx in order:
        pools[int(labels[idx])].append(idx)
    n = len(labels)
    counts = {c: len(pool) for c, pool in pools.items()}
    taken = {0: 0, 1: 0}
    interleaved: list[int] = []
    for pos in range(n):
        # Pick the class lagging furthest behind its proportional share.
        def deficit(c: int) -> float:
            return counts[c] * (pos + 1) / n - taken[c]

        choice = max((c for c in (0, 1) if taken[c] < counts[c]), key=deficit)
        interleaved.append(pools[choice][taken[choice]])
        taken[choice] += 1
    return interleaved


def split(
    n_rows: int,
    seed: int,
    *,
    stratify_labels: np.ndarray | None = None,
) -> SplitIndices:
    """Three-way split: 20% test, then 25% of the remainder as validation.

    Sizes use round-half-up on the test count first, then on the validation
    count (N=2063 -> 1237/413/413). Shuffling is SplitMix64-seeded, so equal
    (n_rows, seed) regenerate identical parts. ``stratify_labels`` switches
    to proportional class interleaving; the default draw is uniform.
    """
    if n_rows < 5:
        raise ValidationError(f"need at least 5 rows to form three parts, got {n_rows}")
    n_test = round_half_up(0.20 * n_rows)
    n_val = round_half_up(0.25 * (n_rows - n_test))
    if stratify_labels is not None:
        if len(stratify_labels) != n_rows:
            raise ValidationError("stratify_labels length must equal n_rows")
        order = _stratified_order(stratify_labels, seed)
    else:
        order = _shuffled_indices(n_rows, seed)
    return SplitIndices(
        train=tuple(order[n_test + n_val :]),
        validation=tuple(order[n_test : n_test + n_val]),
        test=tuple(order[:n_test]),
        seed=seed,
    )


def split_two_way(n_rows: int, seed: int, test_fraction: float = 0.30) -> SplitIndices:
    """Train/test split with an empty validation part (NN-style 70/30)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test_fraction must lie in (0, 1), got {test_fraction!r}")
    if n_rows < 2:
        raise ValidationError(f"need at least 2 rows to split, got {n_rows}")
    n_test = round_half_up(test_fraction * n_rows)
    if n_test == 0 or n_test == n_rows:
        raise ValidationError(
            f"test_fraction {test_fraction!r} leaves an empty part for {n_rows} rows"
        )
    order = _shuffled_indices(n_rows, seed)
    return SplitIndices(
        train=tuple(order[n_test:]),
        validation=(),
        test=tuple(order[:n_test]),
        seed=seed,
    )


def standardize_fit(train_rows: np.ndarray) -> StandardizationParams:
    """Column means and population standard deviations of the training rows.

    Zero-variance columns store std 1 so they standardize to all zeros
    instead of dividing by zero.
    """
    rows = np.asarray(train_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise ValidationError("standardize_fit needs a matrix with at least 2 rows")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)  # population (ddof=0)
    std = np.where(std > 0.0, std, 1.0)
    return StandardizationParams(mean=tuple(float(m) for m in mean), std=tuple(float(s) for s in std))


def standardize_apply(params: StandardizationParams, rows: np.ndarray) -> np.ndarray:
    """Map each entry x to (x - mean_j) / std_j, column by column."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != len(params.mean):
        raise ValidationError(
            f"expected {len(params.mean)} columns, got shape {rows.shape}"
        )
    return (rows - np.asarray(params.mean)) / np.asarray(params.std)


def class_distribution(labels) -> tuple[int, int]:
    """Exact (count of 0s, count of 1s); rejects non-binary labels."""
    arr = np.asarray(labels)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    ones = int(arr.sum()) if arr.size else 0
    return (int(arr.size) - ones, ones)


def records_to_dataset(
    records: list[TrackRecord],
    labels,
    *,
    source: str = "",
) -> LabeledDataset:
    """Assemble a LabeledDataset from records plus one label per record."""
    feats = np.array([r.feature_vector() for r in records], dtype=np.float64).reshape(
        len(records), len(FEATURE_COLUMNS)
    )
    return LabeledDataset(features=feats, labels=np.asarray(labels), source=source)


def record_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(TrackRecord))
