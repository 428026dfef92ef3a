"""Synthetic labeled datasets shaped like the real collection.

The generator produces ``n`` records with exactly ``hits`` positives so the
whole pipeline can run offline at a realistic scale and class imbalance.
Popularity is drawn right-skewed and is consistent with the labels at the
default threshold: hits land in [48, 82], non-hits in [0, 47], and the
overall mean sits near 25. One non-hit is pinned to popularity 0 and one hit
to 82 so the documented range holds for every seed. Hit rows carry a planted
signal: loudness and valence shift upward (a linear cue every model can use),
and danceability/energy concentrate in two opposite corners (high-dance or
high-energy), a shape axis-aligned tree splits recover more completely than a
single linear boundary.
"""

from __future__ import annotations

import numpy as np

from .dataset import TrackRecord
from .errors import ValidationError
from .rng import SplitMix64, derive_seed

_SYNTH_STREAM = 0xD47A

_ARTIST_POOL = 40


def _clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def generate_labeled_records(
    n: int = 2063, hits: int = 237, seed: int = 0
) -> tuple[list[TrackRecord], np.ndarray]:
    """Records plus a 0/1 label vector with exactly ``hits`` ones."""
    if not 0 < hits < n:
        raise ValidationError(f"hits must lie strictly between 0 and n, got hits={hits}, n={n}")
    rng = SplitMix64(derive_seed(seed, _SYNTH_STREAM))

    labels = [1] * hits + [0] * (n - hits)
    rng.shuffle(labels)
    first_hit = labels.index(1)
    first_miss = labels.index(0)

    records: list[TrackRecord] = []
    for i, label in enumerate(labels):
        u = rng.random
        if label:
            popularity = 48 + int(35.0 * u() ** 2)  # right-skewed on [48, 82]
            if u() < 0.5:  # dance-forward hits
                danceability = 0.68 + 0.30 * u()
                energy = 0.12 + 0.40 * u()
            else:  # energy-forward hits
                danceability = 0.15 + 0.40 * u()
                energy = 0.66 + 0.32 * u()
            valence = 0.30 + 0.65 * u()
            loudness = _clip(rng.normal(-7.5, 2.5), -30.0, 0.0)
        else:
            popularity = min(47, int(48.0 * u() ** 1.35))  # right-skewed on [0, 47]
            danceability = 0.15 + 0.65 * u()
            energy = 0.10 + 0.70 * u()
            valence = 0.10 + 0.80 * u()
            loudness = _clip(rng.normal(-11.0, 3.5), -40.0, 0.0)
        if i == first_hit:
            popularity = 82
        elif i == first_miss:
            popularity = 0

        records.append(
            TrackRecord(
                track_id=f"synth-{i:06d}",
                title=f"Synthetic Track {i:06d}",
                artist=f"Artist {rng.randint(_ARTIST_POOL):02d}",
                release_year=2010 + rng.randint(15),
                popularity=popularity,
                danceability=danceability,
                energy=energy,
                key=rng.randint(13) - 1,
                loudness=loudness,
                mode=1 if u() < 0.6 else 0,
                speechiness=_clip(0.02 + 0.40 * u() ** 2, 0.0, 1.0),
                acousticness=_clip(0.80 * u() ** 2, 0.0, 1.0),
                instrumentalness=_clip(0.90 * u() ** 3, 0.0, 1.0),
                liveness=_clip(0.05 + 0.50 * u() ** 2, 0.0, 1.0),
                valence=_clip(valence, 0.0, 1.0),
                tempo=80.0 + 80.0 * u(),
                duration_ms=120_000 + int(240_000 * u()),
                time_signature=(3, 4, 4, 4, 5)[rng.randint(5)],
            )
        )
    return records, np.asarray(labels, dtype=np.int64)


def popularity_histogram(records: list[TrackRecord], bin_width: int = 5) -> list[tuple[int, int]]:
    """(bin_start, count) pairs over popularity; data feed for external plots."""
    if bin_width < 1:
        raise ValidationError("bin_width must be >= 1")
    bins: dict[int, int] = {}
    for record in records:
        start = (record.popularity // bin_width) * bin_width
        bins[start] = bins.get(start, 0) + 1
    return sorted(bins.items())
