from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hitpredict.dataset import TrackRecord

FIXTURES_DIR = Path(__file__).parent / "fixtures"


def make_record(track_id: str = "t1", **overrides) -> TrackRecord:
    defaults = dict(
        track_id=track_id,
        title=f"Song {track_id}",
        artist="Some Artist",
        release_year=2015,
        popularity=40,
        danceability=0.7,
        energy=0.6,
        key=5,
        loudness=-7.5,
        mode=1,
        speechiness=0.05,
        acousticness=0.2,
        instrumentalness=0.0,
        liveness=0.12,
        valence=0.5,
        tempo=118.0,
        duration_ms=210_000,
        time_signature=4,
    )
    defaults.update(overrides)
    return TrackRecord(**defaults)


@pytest.fixture
def spotify_fixtures_dir() -> Path:
    return FIXTURES_DIR / "spotify_session"


@pytest.fixture
def rng_np() -> np.random.Generator:
    return np.random.default_rng(1234)
