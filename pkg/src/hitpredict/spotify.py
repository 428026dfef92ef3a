"""Spotify Web API ingestion: playlists -> popularity + audio features -> records.

The client is transport-agnostic: a transport is anything with
``request(method, url, params=None, data=None, headers=None)`` returning a
:class:`TransportResponse`. Production uses :class:`RequestsTransport`;
tests and offline runs use :class:`FixtureTransport`, which replays canned
payloads entirely in memory and records every call it serves, so request
transcripts (batch sizes, pagination, retry behaviour) can be asserted
without any network.

Batch limits are part of the endpoint contracts: at most 100 ids per
audio-features call and 50 per tracks call. 429 responses are honoured by
sleeping at least ``Retry-After`` seconds and retrying within a bounded
budget; transport failures retry with exponential backoff (base 1 s, cap
32 s, default 5 attempts).
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .dataset import TrackRecord, deduplicate
from .errors import (
    ApiError,
    CredentialError,
    SchemaError,
    TransportError,
    UnknownPlaylistError,
    ValidationError,
)
from .records_io import load_records, save_records  # re-exported convenience

__all__ = [
    "AccessToken",
    "ApiCredentials",
    "Call",
    "FixtureTransport",
    "IngestSummary",
    "PlaylistRef",
    "RequestsTransport",
    "SpotifyClient",
    "TransportResponse",
    "load_records",
    "save_records",
]

DEFAULT_BASE_URL = "https://api.spotify.com"
DEFAULT_TOKEN_URL = "https://accounts.spotify.com/api/token"

AUDIO_FEATURES_BATCH_LIMIT = 100
TRACKS_BATCH_LIMIT = 50
PLAYLIST_PAGE_LIMIT = 100

_FEATURE_FIELDS = (
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
_INT_FEATURES = ("key", "mode", "duration_ms", "time_signature")


@dataclass(frozen=True)
class ApiCredentials:
    client_id: str
    client_secret: str

    def __post_init__(self):
        if not self.client_id or not self.client_secret:
            raise ValidationError("client_id and client_secret must be non-empty")

    def __repr__(self) -> str:  # never leak the secret into logs
        return f"ApiCredentials(client_id={self.client_id!r}, client_secret='***')"


@dataclass(frozen=True)
class AccessToken:
    token: str
    expires_at: float  # wall-clock seconds

    REFRESH_MARGIN = 30.0

    def valid_at(self, now: float) -> bool:
        return now < self.expires_at - self.REFRESH_MARGIN


@dataclass(frozen=True)
class PlaylistRef:
    playlist_id: str
    description: str = ""

    def __post_init__(self):
        if not self.playlist_id:
            raise ValidationError("playlist_id must be non-empty")


@dataclass(frozen=True)
class TransportResponse:
    status: int
    headers: dict
    body: object  # parsed JSON (or None)


@dataclass(frozen=True)
class Call:
    method: str
    url: str
    params: dict
    data: dict


@dataclass(frozen=True)
class TrackMeta:
    popularity: int
    title: str
    artist: str
    release_year: int | None


@dataclass
class IngestSummary:
    playlists: int = 0
    playlist_track_ids: int = 0
    unique_ids: int = 0
    missing_popularity: list = field(default_factory=list)
    missing_features: list = field(default_factory=list)
    invalid_records: list = field(default_factory=list)
    duplicates_removed: int = 0
    year_filtered: int = 0
    kept: int = 0
    fetched_at: str = ""

    def dropped(self) -> int:
        return len(set(self.missing_popularity) | set(self.missing_features)) + len(
            self.invalid_records
        )

    def to_dict(self) -> dict:
        return {
            "playlists": self.playlists,
            "playlist_track_ids": self.playlist_track_ids,
            "unique_ids": self.unique_ids,
            "missing_popularity": list(self.missing_popularity),
            "missing_features": list(self.missing_features),
            "invalid_records": list(self.invalid_records),
            "duplicates_removed": self.duplicates_removed,
            "year_filtered": self.year_filtered,
            "kept": self.kept,
            "fetched_at": self.fetched_at,
        }


class RequestsTransport:
    """Thin wrapper over requests.Session; network errors become TransportError."""

    def __init__(self, timeout: float = 30.0):
        import requests

        self._session = requests.Session()
        self._timeout = timeout
        self._requests = requests

    def request(self, method, url, params=None, data=None, headers=None) -> TransportResponse:
        try:
            resp = self._session.request(
                method, url, params=params, data=data, headers=headers, timeout=self._timeout
            )
        except self._requests.RequestException as exc:
            raise TransportError(f"{method} {url}: {exc}") from exc
        try:
            body = resp.json() if resp.content else None
        except ValueError as exc:
            raise TransportError(f"{method} {url}: response is not JSON") from exc
        return TransportResponse(status=resp.status_code, headers=dict(resp.headers), body=body)


class FixtureTransport:
    """Replays canned API payloads; records every call; never touches the network.

    ``playlists`` maps playlist id -> ordered list of track ids (None entries
    model removed/local tracks). ``tracks`` maps id -> dict with keys
    popularity/name/artist/release_date; ``audio_features`` maps id -> raw
    feature dict, or None for ids the API cannot analyze. ``fail_after``
    ordinals (1-based call numbers) answer 429 with the given Retry-After.
    """

    def __init__(
        self,
        *,
        playlists: dict[str, list] | None = None,
        tracks: dict[str, dict] | None = None,
        audio_features: dict[str, dict | None] | None = None,
        token: str = "tok-1",
        expires_in: int = 3600,
        reject_credentials: bool = False,
        rate_limit_calls: dict[int, int] | None = None,
        error_calls: dict[int, int] | None = None,
    ):
        self.playlists = playlists or {}
        self.tracks = tracks or {}
        self.audio_features = audio_features or {}
        self.token = token
        self.expires_in = expires_in
        self.reject_credentials = reject_credentials
        self.rate_limit_calls = dict(rate_limit_calls or {})
        self.error_calls = dict(error_calls or {})
        self.calls: list[Call] = []
        self.token_requests = 0
        self._token_counter = 0
        self._lock = threading.Lock()

    @classmethod
    def from_dir(cls, path: str | Path) -> "FixtureTransport":
        """Load a recorded session from a fixtures directory.

        Expected files: token.json ({access_token, expires_in}),
        playlists.json (id -> track id list), tracks.json (id -> metadata)
        and audio_features.json (id -> feature dict or null).
        """
        root = Path(path)
        if not root.is_dir():
            raise ValidationError(f"fixtures directory not found: {root}")

        def read(name: str, default):
            file = root / name
            if not file.exists():
                return default
            return json.loads(file.read_text(encoding="utf-8"))

        token_doc = read("token.json", {"access_token": "tok-1", "expires_in": 3600})
        return cls(
            playlists=read("playlists.json", {}),
            tracks=read("tracks.json", {}),
            audio_features=read("audio_features.json", {}),
            token=token_doc.get("access_token", "tok-1"),
            expires_in=int(token_doc.get("expires_in", 3600)),
        )

    # -- request dispatch ---------------------------------------------------

    def request(self, method, url, params=None, data=None, headers=None) -> TransportResponse:
        params = dict(params or {})
        data = dict(data or {})
        with self._lock:
            self.calls.append(Call(method=method, url=url, params=params, data=data))
            ordinal = len(self.calls)
        if ordinal in self.rate_limit_calls:
            retry_after = self.rate_limit_calls.pop(ordinal)
            return TransportResponse(
                status=429, headers={"Retry-After": str(retry_after)}, body={"error": "rate limited"}
            )
        if ordinal in self.error_calls:
            status = self.error_calls.pop(ordinal)
            return TransportResponse(status=status, headers={}, body={"error": "injected"})

        split = urlsplit(url)
        path = split.path
        if split.query:
            for key, values in parse_qs(split.query).items():
                params.setdefault(key, values[0])

        if method == "POST" and path.endswith("/api/token"):
            return self._token_response(data)
        if "/playlists/" in path and path.endswith("/tracks"):
            playlist_id = path.split("/playlists/")[1].split("/")[0]
            return self._playlist_page(split, playlist_id, params)
        if path.endswith("/audio-features"):
            ids = params.get("ids", "").split(",") if params.get("ids") else []
            return self._json(
                {"audio_features": [self.audio_features.get(i) for i in ids]}
            )
        if path.endswith("/tracks"):
            ids = params.get("ids", "").split(",") if params.get("ids") else []
            return self._json({"tracks": [self._track_payload(i) for i in ids]})
        return TransportResponse(status=404, headers={}, body={"error": "no fixture route"})

    @staticmethod
    def _json(body) -> TransportResponse:
        return TransportResponse(status=200, headers={}, body=body)

    def _token_response(self, data: dict) -> TransportResponse:
        self.token_requests += 1
        if self.reject_credentials:
            return TransportResponse(
                status=400, headers={}, body={"error": "invalid_client"}
            )
        self._token_counter += 1
        token = self.token if self._token_counter == 1 else f"{self.token}-{self._token_counter}"
        return self._json(
            {"access_token": token, "token_type": "Bearer", "expires_in": self.expires_in}
        )

    def _playlist_page(self, split, playlist_id: str, params: dict) -> TransportResponse:
        if playlist_id not in self.playlists:
            return TransportResponse(status=404, headers={}, body={"error": "not found"})
        items = self.playlists[playlist_id]
        offset = int(params.get("offset", 0))
        limit = int(params.get("limit", PLAYLIST_PAGE_LIMIT))
        page = items[offset : offset + limit]
        next_offset = offset + limit
        next_url = None
        if next_offset < len(items):
            base = f"{split.scheme}://{split.netloc}" if split.netloc else ""
            next_url = f"{base}{split.path}?offset={next_offset}&limit={limit}"
        body = {
            "items": [
                {"track": None if tid is None else {"id": tid, "is_local": False}} for tid in page
            ],
            "next": next_url,
            "total": len(items),
        }
        return self._json(body)

    def _track_payload(self, track_id: str):
        meta = self.tracks.get(track_id)
        if meta is None:
            return None
        return {
            "id": track_id,
            "popularity": meta["popularity"],
            "name": meta.get("name", ""),
            "artists": [{"name": meta.get("artist", "")}],
            "album": {"release_date": meta.get("release_date", "")},
        }


class SpotifyClient:
    """Client-credentials API client with caching, pagination, batching and retries."""

    def __init__(
        self,
        credentials: ApiCredentials | None = None,
        transport=None,
        *,
        base_url: str = DEFAULT_BASE_URL,
        token_url: str = DEFAULT_TOKEN_URL,
        sleep=time.sleep,
        clock=time.time,
        max_retries: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 32.0,
        max_in_flight: int = 1,
    ):
        if transport is None:
            transport = RequestsTransport()
        if max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")
        self._credentials = credentials
        self._transport = transport
        self._base_url = base_url.rstrip("/")
        self._token_url = token_url
        self._sleep = sleep
        self._clock = clock
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._backoff_cap = backoff_cap
        self._max_in_flight = max_in_flight
        self._token: AccessToken | None = None
        self._token_lock = threading.Lock()

    # -- auth ----------------------------------------------------------------

    def authenticate(self) -> AccessToken:
        """Return a valid bearer token, reusing the cache until near expiry."""
        with self._token_lock:
            now = self._clock()
            if self._token is not None and self._token.valid_at(now):
                return self._token
            if self._credentials is None:
                # Fixture transports mint tokens without real credentials.
                data = {"grant_type": "client_credentials"}
            else:
                data = {
                    "grant_type": "client_credentials",
                    "client_id": self._credentials.client_id,
                    "client_secret": self._credentials.client_secret,
                }
            response = self._request_with_retries("POST", self._token_url, data=data)
            if response.status == 400 or response.status == 401:
                raise CredentialError(f"token endpoint rejected credentials (HTTP {response.status})")
            if response.status >= 400:
                raise ApiError(f"token endpoint failed with HTTP {response.status}")
            body = response.body or {}
            token = body.get("access_token")
            expires_in = body.get("expires_in", 3600)
            if not token:
                raise ApiError("token endpoint returned no access_token")
            self._token = AccessToken(token=token, expires_at=self._clock() + float(expires_in))
            return self._token

    def _auth_headers(self) -> dict:
        return {"Authorization": f"Bearer {self.authenticate().token}"}

    # -- transport plumbing ----------------------------------------------------

    def _request_with_retries(self, method, url, params=None, data=None, headers=None) -> TransportResponse:
        attempts = 0
        while True:
            try:
                response = self._transport.request(method, url, params=params, data=data, headers=headers)
            except TransportError:
                attempts += 1
                if attempts > self._max_retries:
                    raise
                self._sleep(min(self._backoff_base * 2 ** (attempts - 1), self._backoff_cap))
                continue
            if response.status == 429:
                attempts += 1
                if attempts > self._max_retries:
                    raise TransportError(f"{method} {url}: rate-limit retries exhausted")
                retry_after = float(response.headers.get("Retry-After", self._backoff_base))
                self._sleep(retry_after)
                continue
            if response.status >= 500:
                attempts += 1
                if attempts > self._max_retries:
                    raise TransportError(f"{method} {url}: HTTP {response.status} after retries")
                self._sleep(min(self._backoff_base * 2 ** (attempts - 1), self._backoff_cap))
                continue
            return response

    def _get_api(self, path_or_url: str, params=None) -> TransportResponse:
        url = path_or_url if path_or_url.startswith("http") else f"{self._base_url}{path_or_url}"
        response = self._request_with_retries("GET", url, params=params, headers=self._auth_headers())
        if response.status == 404:
            if "/playlists/" in url:
                raise UnknownPlaylistError(f"unknown playlist: {url}")
            raise ApiError(f"resource not found: {url}")
        if response.status >= 400:
            raise ApiError(f"GET {url} failed with HTTP {response.status}")
        return response

    # -- endpoints --------------------------------------------------------------

    def fetch_playlist_tracks(self, playlist: PlaylistRef) -> list[str]:
        """All track ids of a playlist, in playlist order, across all pages."""
        ids: list[str] = []
        url: str | None = f"/v1/playlists/{playlist.playlist_id}/tracks"
        params = {"limit": PLAYLIST_PAGE_LIMIT, "offset": 0}
        while url is not None:
            body = self._get_api(url, params=params).body or {}
            for item in body.get("items", []):
                track = item.get("track")
                if not track or track.get("is_local") or not track.get("id"):
                    continue
                ids.append(track["id"])
            url = body.get("next")
            params = None  # next links already carry their query string
        return ids

    def _fetch_chunked(self, ids: list[str], chunk_size: int, fetch_chunk):
        chunks = [ids[i : i + chunk_size] for i in range(0, len(ids), chunk_size)]
        if self._max_in_flight > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self._max_in_flight) as pool:
                return list(pool.map(fetch_chunk, chunks))
        return [fetch_chunk(chunk) for chunk in chunks]

    def fetch_audio_features(self, ids: list[str]) -> tuple[dict[str, dict], list[str]]:
        """id -> 13-feature dict; ids the API returns as null land in the skipped list."""
        if not ids:
            raise ValidationError("ids must be non-empty")

        def fetch_chunk(chunk: list[str]):
            body = self._get_api("/v1/audio-features", params={"ids": ",".join(chunk)}).body or {}
            rows = body.get("audio_features")
            if rows is None or len(rows) != len(chunk):
                raise ApiError("audio-features response does not match request ids")
            features: dict[str, dict] = {}
            skipped: list[str] = []
            for track_id, row in zip(chunk, rows):
                if row is None:
                    skipped.append(track_id)
                    continue
                features[track_id] = _parse_feature_row(track_id, row)
            return features, skipped

        features: dict[str, dict] = {}
        skipped: list[str] = []
        for chunk_features, chunk_skipped in self._fetch_chunked(
            ids, AUDIO_FEATURES_BATCH_LIMIT, fetch_chunk
        ):
            features.update(chunk_features)
            skipped.extend(chunk_skipped)
        return features, skipped

    def fetch_track_popularity(self, ids: list[str]) -> tuple[dict[str, TrackMeta], list[str]]:
        """id -> (popularity, title, artist, release_year); null payloads are skipped."""
        if not ids:
            raise ValidationError("ids must be non-empty")

        def fetch_chunk(chunk: list[str]):
            body = self._get_api("/v1/tracks", params={"ids": ",".join(chunk)}).body or {}
            rows = body.get("tracks")
            if rows is None or len(rows) != len(chunk):
                raise ApiError("tracks response does not match request ids")
            meta: dict[str, TrackMeta] = {}
            skipped: list[str] = []
            for track_id, row in zip(chunk, rows):
                if row is None:
                    skipped.append(track_id)
                    continue
                meta[track_id] = _parse_track_row(track_id, row)
            return meta, skipped

        meta: dict[str, TrackMeta] = {}
        skipped: list[str] = []
        for chunk_meta, chunk_skipped in self._fetch_chunked(ids, TRACKS_BATCH_LIMIT, fetch_chunk):
            meta.update(chunk_meta)
            skipped.extend(chunk_skipped)
        return meta, skipped

    # -- orchestration ------------------------------------------------------------

    def build_dataset(
        self,
        playlists: list[PlaylistRef],
        year_filter: tuple[int | None, int | None] | None = None,
    ) -> tuple[list[TrackRecord], IngestSummary]:
        """Crawl playlists, join popularity with audio features, dedupe, filter.

        Tracks missing either payload are dropped and counted; records failing
        domain validation are collected per id rather than aborting the run.
        """
        if not playlists:
            raise ValidationError("need at least one playlist")
        summary = IngestSummary(
            playlists=len(playlists),
            fetched_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )

        union: list[str] = []
        seen: set[str] = set()
        for ref in playlists:
            for track_id in self.fetch_playlist_tracks(ref):
                summary.playlist_track_ids += 1
                if track_id not in seen:
                    seen.add(track_id)
                    union.append(track_id)
        summary.unique_ids = len(union)
        if not union:
            return [], summary

        meta, missing_meta = self.fetch_track_popularity(union)
        features, missing_features = self.fetch_audio_features(union)
        summary.missing_popularity = missing_meta
        summary.missing_features = missing_features

        records: list[TrackRecord] = []
        for track_id in union:
            if track_id not in meta or track_id not in features:
                continue
            m = meta[track_id]
            try:
                records.append(
                    TrackRecord(
                        track_id=track_id,
                        title=m.title,
                        artist=m.artist,
                        release_year=m.release_year,
                        popularity=m.popularity,
                        **features[track_id],
                    )
                )
            except ValidationError as exc:
                summary.invalid_records.append(f"{track_id}: {exc}")

        deduped = deduplicate(records)
        summary.duplicates_removed = len(records) - len(deduped)

        if year_filter is not None:
            lo, hi = year_filter
            kept = [
                r
                for r in deduped
                if r.release_year is not None
                and (lo is None or r.release_year >= lo)
                and (hi is None or r.release_year <= hi)
            ]
            summary.year_filtered = len(deduped) - len(kept)
            deduped = kept

        summary.kept = len(deduped)
        return deduped, summary


def _parse_feature_row(track_id: str, row: dict) -> dict:
    features = {}
    for name in _FEATURE_FIELDS:
        if name not in row:
            raise SchemaError(f"audio-features payload for id {track_id!r} is missing {name!r}")
        value = row[name]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(
                f"audio-features payload for id {track_id!r} has non-numeric {name!r}: {value!r}"
            )
        features[name] = int(value) if name in _INT_FEATURES else float(value)
    return features


def _parse_track_row(track_id: str, row: dict) -> TrackMeta:
    popularity = row.get("popularity")
    if not isinstance(popularity, int) or isinstance(popularity, bool) or not 0 <= popularity <= 100:
        raise ValidationError(
            f"track {track_id!r} has popularity outside [0, 100]: {popularity!r}"
        )
    artists = row.get("artists") or []
    artist = ", ".join(a.get("name", "") for a in artists if a.get("name"))
    release_date = (row.get("album") or {}).get("release_date") or ""
    release_year: int | None = None
    if len(release_date) >= 4 and release_date[:4].isdigit():
        year = int(release_date[:4])
        if year >= 1900:
            release_year = year
    return TrackMeta(
        popularity=popularity,
        title=row.get("name", ""),
        artist=artist,
        release_year=release_year,
    )
