from __future__ import annotations

import socket

import pytest

from hitpredict.errors import (
    CredentialError,
    TransportError,
    UnknownPlaylistError,
    ValidationError,
)
from hitpredict.spotify import (
    AccessToken,
    ApiCredentials,
    FixtureTransport,
    PlaylistRef,
    SpotifyClient,
)


class FakeClock:
    """Virtual time: sleep() records the delay and advances the clock."""

    def __init__(self):
        self.now = 1_000.0
        self.sleeps: list[float] = []

    def time(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds

    def advance(self, seconds: float) -> None:
        self.now += seconds


def feature_payload(danceability=0.5, **overrides):
    payload = dict(
        danceability=danceability,
        energy=0.6,
        key=2,
        loudness=-8.0,
        mode=1,
        speechiness=0.04,
        acousticness=0.3,
        instrumentalness=0.0,
        liveness=0.1,
        valence=0.4,
        tempo=110.0,
        duration_ms=180_000,
        time_signature=4,
    )
    payload.update(overrides)
    return payload


def track_payload(popularity=40, name="Song", artist="Artist", release_date="2016-02-03"):
    return {"popularity": popularity, "name": name, "artist": artist, "release_date": release_date}


def make_client(transport, **kwargs):
    clock = FakeClock()
    client = SpotifyClient(
        credentials=ApiCredentials("cid", "secret"),
        transport=transport,
        sleep=clock.sleep,
        clock=clock.time,
        **kwargs,
    )
    return client, clock


def build_fixture(n_tracks: int, playlist_id="pl", **transport_kwargs) -> FixtureTransport:
    ids = [f"t{i:04d}" for i in range(n_tracks)]
    return FixtureTransport(
        playlists={playlist_id: ids},
        tracks={
            i: track_payload(popularity=(3 * k) % 80, name=f"Song {i}") for k, i in enumerate(ids)
        },
        audio_features={i: feature_payload() for i in ids},
        **transport_kwargs,
    )


class TestAuthenticate:
    def test_returns_fixture_token_with_expiry(self):
        client, clock = make_client(FixtureTransport())
        token = client.authenticate()
        assert token.token == "tok-1"
        assert token.expires_at == clock.now + 3600

    def test_bad_secret_is_credential_error(self):
        client, _ = make_client(FixtureTransport(reject_credentials=True))
        with pytest.raises(CredentialError):
            client.authenticate()

    def test_cached_until_near_expiry(self):
        transport = FixtureTransport()
        client, clock = make_client(transport)
        first = client.authenticate()
        clock.advance(3600 - 60)  # still outside the 30 s refresh margin
        assert client.authenticate() is first
        assert transport.token_requests == 1

    def test_expired_token_triggers_reauthentication(self):
        transport = FixtureTransport(expires_in=100)
        client, clock = make_client(transport)
        first = client.authenticate()
        clock.advance(95)  # inside the 30 s margin of the 100 s expiry
        second = client.authenticate()
        assert second is not first
        assert transport.token_requests == 2

    def test_refresh_margin_constant(self):
        token = AccessToken(token="x", expires_at=1000.0)
        assert token.valid_at(969.9)
        assert not token.valid_at(970.1)


class TestFetchPlaylistTracks:
    def test_two_pages_in_order(self):
        transport = build_fixture(137)
        client, _ = make_client(transport)
        ids = client.fetch_playlist_tracks(PlaylistRef("pl"))
        assert ids == [f"t{i:04d}" for i in range(137)]
        pages = [c for c in transport.calls if "/playlists/" in c.url]
        assert len(pages) == 2

    def test_empty_playlist(self):
        client, _ = make_client(FixtureTransport(playlists={"pl": []}))
        assert client.fetch_playlist_tracks(PlaylistRef("pl")) == []

    def test_null_tracks_skipped(self):
        client, _ = make_client(FixtureTransport(playlists={"pl": ["a", None, "b"]}))
        assert client.fetch_playlist_tracks(PlaylistRef("pl")) == ["a", "b"]

    def test_unknown_playlist_404(self):
        client, _ = make_client(FixtureTransport(playlists={}))
        with pytest.raises(UnknownPlaylistError):
            client.fetch_playlist_tracks(PlaylistRef("missing"))

    def test_one_rate_limit_then_success(self):
        # call 1 is the token request; call 2 (first page) gets the 429
        transport = build_fixture(137, rate_limit_calls={2: 7})
        client, clock = make_client(transport)
        ids = client.fetch_playlist_tracks(PlaylistRef("pl"))
        assert len(ids) == 137
        assert clock.sleeps == [7.0]  # exactly one delay, at least Retry-After

    def test_rate_limit_retries_are_bounded(self):
        transport = build_fixture(5, rate_limit_calls={i: 1 for i in range(2, 20)})
        client, clock = make_client(transport, max_retries=5)
        with pytest.raises(TransportError, match="rate-limit"):
            client.fetch_playlist_tracks(PlaylistRef("pl"))
        assert len(clock.sleeps) == 5


class TestFetchAudioFeatures:
    def test_250_ids_make_three_calls(self):
        ids = [f"t{i:04d}" for i in range(250)]
        transport = FixtureTransport(audio_features={i: feature_payload() for i in ids})
        client, _ = make_client(transport)
        features, skipped = client.fetch_audio_features(ids)
        assert len(features) == 250 and skipped == []
        calls = [c for c in transport.calls if "audio-features" in c.url]
        sizes = [len(c.params["ids"].split(",")) for c in calls]
        assert sizes == [100, 100, 50]

    def test_fixture_value_echoed(self):
        transport = FixtureTransport(audio_features={"one": feature_payload(danceability=0.73)})
        client, _ = make_client(transport)
        features, _ = client.fetch_audio_features(["one"])
        assert features["one"]["danceability"] == 0.73

    def test_null_feature_lands_in_skipped(self):
        transport = FixtureTransport(
            audio_features={"a": feature_payload(), "b": None, "c": feature_payload()}
        )
        client, _ = make_client(transport)
        features, skipped = client.fetch_audio_features(["a", "b", "c"])
        assert sorted(features) == ["a", "c"]
        assert skipped == ["b"]

    def test_malformed_payload_names_offending_id(self):
        bad = feature_payload()
        del bad["tempo"]
        transport = FixtureTransport(audio_features={"weird": bad})
        client, _ = make_client(transport)
        with pytest.raises(Exception, match="weird"):
            client.fetch_audio_features(["weird"])

    def test_empty_ids_rejected(self):
        client, _ = make_client(FixtureTransport())
        with pytest.raises(ValidationError):
            client.fetch_audio_features([])


class TestFetchTrackPopularity:
    def test_120_ids_make_three_calls(self):
        ids = [f"t{i:04d}" for i in range(120)]
        transport = FixtureTransport(tracks={i: track_payload() for i in ids})
        client, _ = make_client(transport)
        meta, skipped = client.fetch_track_popularity(ids)
        assert len(meta) == 120 and skipped == []
        calls = [c for c in transport.calls if c.url.endswith("/v1/tracks")]
        sizes = [len(c.params["ids"].split(",")) for c in calls]
        assert sizes == [50, 50, 20]

    def test_popularity_82_echoed(self):
        transport = FixtureTransport(tracks={"big": track_payload(popularity=82)})
        client, _ = make_client(transport)
        meta, _ = client.fetch_track_popularity(["big"])
        assert meta["big"].popularity == 82

    def test_out_of_range_popularity_rejected(self):
        transport = FixtureTransport(tracks={"bad": track_payload(popularity=101)})
        client, _ = make_client(transport)
        with pytest.raises(ValidationError, match="101"):
            client.fetch_track_popularity(["bad"])

    def test_release_year_parsed_from_date_prefix(self):
        transport = FixtureTransport(
            tracks={
                "dated": track_payload(release_date="2012-05-01"),
                "yearonly": track_payload(release_date="2019"),
                "unknown": track_payload(release_date=""),
            }
        )
        client, _ = make_client(transport)
        meta, _ = client.fetch_track_popularity(["dated", "yearonly", "unknown"])
        assert meta["dated"].release_year == 2012
        assert meta["yearonly"].release_year == 2019
        assert meta["unknown"].release_year is None


class TestBuildDataset:
    def test_union_of_overlapping_playlists(self):
        first = [f"a{i:03d}" for i in range(60)]
        second = first[:10] + [f"b{i:03d}" for i in range(40)]  # 10 overlap -> 100 unique
        all_ids = sorted(set(first) | set(second))
        transport = FixtureTransport(
            playlists={"p1": first, "p2": second},
            tracks={i: track_payload(name=f"Song {i}") for i in all_ids},
            audio_features={i: feature_payload() for i in all_ids},
        )
        client, _ = make_client(transport)
        records, summary = client.build_dataset([PlaylistRef("p1"), PlaylistRef("p2")])
        assert len(records) == 100
        assert summary.unique_ids == 100
        assert summary.playlist_track_ids == 110

    def test_year_filter_drops_old_tracks(self):
        transport = FixtureTransport(
            playlists={"p": ["old", "new"]},
            tracks={
                "old": track_payload(release_date="2008-01-01", name="Old"),
                "new": track_payload(release_date="2015-01-01", name="New"),
            },
            audio_features={"old": feature_payload(), "new": feature_payload()},
        )
        client, _ = make_client(transport)
        records, summary = client.build_dataset([PlaylistRef("p")], year_filter=(2010, None))
        assert [r.track_id for r in records] == ["new"]
        assert summary.year_filtered == 1

    def test_missing_features_counted_as_dropped(self):
        ids = [f"t{i}" for i in range(10)]
        features = {i: feature_payload() for i in ids}
        for gone in ("t2", "t5", "t7"):
            features[gone] = None
        transport = FixtureTransport(
            playlists={"p": ids},
            tracks={i: track_payload(name=f"Song {i}") for i in ids},
            audio_features=features,
        )
        client, _ = make_client(transport)
        records, summary = client.build_dataset([PlaylistRef("p")])
        assert len(records) == 7
        assert summary.missing_features == ["t2", "t5", "t7"]
        assert summary.dropped() == 3

    def test_duplicate_titles_deduped(self):
        transport = FixtureTransport(
            playlists={"p": ["x1", "x2"]},
            tracks={
                "x1": track_payload(name="Same Song", artist="Same Artist", popularity=30),
                "x2": track_payload(name="same  song", artist="SAME ARTIST", popularity=55),
            },
            audio_features={"x1": feature_payload(), "x2": feature_payload()},
        )
        client, _ = make_client(transport)
        records, summary = client.build_dataset([PlaylistRef("p")])
        assert [r.track_id for r in records] == ["x2"]
        assert summary.duplicates_removed == 1

    def test_no_playlists_rejected(self):
        client, _ = make_client(FixtureTransport())
        with pytest.raises(ValidationError):
            client.build_dataset([])

    def test_records_pass_invariants_and_are_unique(self):
        transport = build_fixture(30)
        client, _ = make_client(transport)
        records, _ = client.build_dataset([PlaylistRef("pl")])
        ids = [r.track_id for r in records]
        assert len(ids) == len(set(ids))


class TestTranscriptInvariants:
    def test_batch_limits_never_exceeded(self):
        transport = build_fixture(137)
        client, _ = make_client(transport)
        client.build_dataset([PlaylistRef("pl")])
        for call in transport.calls:
            if "audio-features" in call.url:
                assert len(call.params["ids"].split(",")) <= 100
            elif call.url.endswith("/v1/tracks"):
                assert len(call.params["ids"].split(",")) <= 50

    def test_transport_errors_back_off_exponentially(self):
        transport = build_fixture(5, error_calls={2: 503, 3: 503})
        client, clock = make_client(transport)
        ids = client.fetch_playlist_tracks(PlaylistRef("pl"))
        assert len(ids) == 5
        assert clock.sleeps == [1.0, 2.0]  # base 1 s, doubling

    def test_offline_mode_never_touches_the_network(self, monkeypatch, spotify_fixtures_dir):
        def deny(*args, **kwargs):
            raise AssertionError("network I/O attempted in offline mode")

        monkeypatch.setattr(socket, "socket", deny)
        monkeypatch.setattr(socket, "create_connection", deny)
        transport = FixtureTransport.from_dir(spotify_fixtures_dir)
        client = SpotifyClient(transport=transport, sleep=lambda s: None, clock=lambda: 0.0)
        records, summary = client.build_dataset([PlaylistRef("afrobeats-fixture-137")])
        assert len(records) == 137
        assert summary.kept == 137

    def test_parallel_chunk_fetch_matches_sequential(self):
        ids = [f"t{i:04d}" for i in range(250)]
        features = {i: feature_payload(danceability=round(0.3 + (k % 50) / 100, 3)) for k, i in enumerate(ids)}
        sequential_transport = FixtureTransport(audio_features=features)
        parallel_transport = FixtureTransport(audio_features=features)
        seq_client, _ = make_client(sequential_transport)
        par_client, _ = make_client(parallel_transport, max_in_flight=3)
        seq = seq_client.fetch_audio_features(ids)[0]
        par = par_client.fetch_audio_features(ids)[0]
        assert seq == par
