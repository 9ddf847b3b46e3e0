"""HTTP transport with live, replay, and record modes.

Fixture replay is the backbone of deterministic testing: a replayed
response is byte-exact and reaches no socket. Request keys are canonical
(source name, URL path, sorted percent-encoded query parameters) so a
fixture written once survives parameter reordering. Auth and politeness
parameters are transport-level and deliberately excluded from the key
(fixtures must not depend on which API keys happen to be configured).
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote, urlsplit

import requests

from ..errors import ConfigError, FixtureMissing

RETRY_MAX_ATTEMPTS = 3  # 1 initial + 2 retries
RETRY_BASE_DELAY_S = 0.5


@dataclass(frozen=True)
class HttpRequest:
    source: str
    url: str  # scheme://host/path, no query string
    params: tuple[tuple[str, str], ...] = ()  # semantic parameters (keyed)
    auth_params: tuple[tuple[str, str], ...] = ()  # sent live, never keyed
    headers: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class RawResponse:
    status: int | None
    body: bytes
    headers: tuple[tuple[str, str], ...] = ()
    io_error: str | None = None
    latency_ms: int = 0


def request_key(request: HttpRequest) -> str:
    """Canonical, reorder-stable key: source | url path | sorted encoded params."""
    path = urlsplit(request.url).path
    encoded = "&".join(
        f"{quote(k, safe='')}={quote(v, safe='')}"
        for k, v in sorted(request.params)
    )
    return f"{request.source}|{path}|{encoded}"


def _fixture_path(fixtures_dir: Path, key: str) -> Path:
    digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
    return fixtures_dir / f"{digest}.json"


class FixtureStore:
    """One JSON file per request-key hash; bodies preserved bit-exactly."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def load(self, key: str) -> RawResponse:
        path = _fixture_path(self.directory, key)
        if not path.is_file():
            raise FixtureMissing(key)
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("io_error"):
            return RawResponse(status=None, body=b"", io_error=data["io_error"])
        if "body_b64" in data:
            body = base64.b64decode(data["body_b64"])
        else:
            body = data.get("body", "").encode("utf-8")
        headers = tuple(sorted((data.get("headers") or {}).items()))
        return RawResponse(status=data.get("status"), body=body, headers=headers)

    def save(self, key: str, response: RawResponse) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        record: dict = {"request_key": key}
        if response.io_error:
            record["io_error"] = response.io_error
        else:
            record["status"] = response.status
            record["headers"] = {k: v for k, v in response.headers
                                 if k.lower() in ("content-type",)}
            try:
                text = response.body.decode("utf-8")
                if text.encode("utf-8") == response.body:
                    record["body"] = text
                else:  # pragma: no cover - decode round-trip is exact for utf-8
                    record["body_b64"] = base64.b64encode(response.body).decode("ascii")
            except UnicodeDecodeError:
                record["body_b64"] = base64.b64encode(response.body).decode("ascii")
        path = _fixture_path(self.directory, key)
        path.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n",
                        encoding="utf-8")
        return path

    def has(self, key: str) -> bool:
        return _fixture_path(self.directory, key).is_file()


class Transport:
    def fetch(self, request: HttpRequest) -> RawResponse:
        raise NotImplementedError

    @property
    def mode(self) -> str:
        raise NotImplementedError


class LiveTransport(Transport):
    """Real HTTP with bounded retries (full-jitter exponential backoff).

    Only retryable failures (connection errors, 429, 5xx) are retried,
    at most twice, starting at 500 ms.
    """

    def __init__(self, timeout_s: float = 15.0, session: requests.Session | None = None,
                 sleep=time.sleep, rng: random.Random | None = None):
        self.timeout_s = timeout_s
        self.session = session or requests.Session()
        self._sleep = sleep
        self._rng = rng or random.Random()

    @property
    def mode(self) -> str:
        return "live"

    def _attempt(self, request: HttpRequest) -> RawResponse:
        params = dict(request.params)
        params.update(dict(request.auth_params))
        started = time.monotonic()
        try:
            resp = self.session.get(
                request.url,
                params=params,
                headers=dict(request.headers) or None,
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            latency = int((time.monotonic() - started) * 1000)
            return RawResponse(status=None, body=b"", io_error=f"{type(exc).__name__}: {exc}",
                               latency_ms=latency)
        latency = int((time.monotonic() - started) * 1000)
        headers = tuple(sorted((k.lower(), v) for k, v in resp.headers.items()
                               if k.lower() in ("content-type",)))
        return RawResponse(status=resp.status_code, body=resp.content,
                           headers=headers, latency_ms=latency)

    def fetch(self, request: HttpRequest) -> RawResponse:
        response = self._attempt(request)
        attempt = 1
        while attempt < RETRY_MAX_ATTEMPTS and _is_retryable(response):
            delay = RETRY_BASE_DELAY_S * (2 ** (attempt - 1)) * self._rng.random()
            self._sleep(delay)
            response = self._attempt(request)
            attempt += 1
        return response


def _is_retryable(response: RawResponse) -> bool:
    if response.io_error is not None:
        return True
    return response.status in (429,) or (response.status is not None and response.status >= 500)


class ReplayTransport(Transport):
    """Serve recorded fixtures only; zero socket operations, zero latency."""

    def __init__(self, store: FixtureStore):
        self.store = store

    @property
    def mode(self) -> str:
        return "replay"

    def fetch(self, request: HttpRequest) -> RawResponse:
        return self.store.load(request_key(request))


class RecordTransport(Transport):
    """Live fetch, then persist the exchange for later replay."""

    def __init__(self, store: FixtureStore, live: LiveTransport | None = None):
        self.store = store
        self.live = live or LiveTransport()

    @property
    def mode(self) -> str:
        return "record"

    def fetch(self, request: HttpRequest) -> RawResponse:
        response = self.live.fetch(request)
        self.store.save(request_key(request), response)
        return response


class RefusingTransport(Transport):
    """Fails on any fetch; used to prove a code path makes no requests."""

    def __init__(self):
        self.calls: list[str] = []

    @property
    def mode(self) -> str:
        return "refusing"

    def fetch(self, request: HttpRequest) -> RawResponse:
        self.calls.append(request_key(request))
        raise AssertionError(f"unexpected network request: {request_key(request)}")


def make_transport(mode: str, fixtures_dir: str | Path | None = None,
                   timeout_s: float = 15.0) -> Transport:
    if mode == "live":
        return LiveTransport(timeout_s=timeout_s)
    if fixtures_dir is None:
        raise ConfigError(f"{mode} transport requires a fixtures directory")
    store = FixtureStore(fixtures_dir)
    if mode == "replay":
        return ReplayTransport(store)
    if mode == "record":
        return RecordTransport(store, live=LiveTransport(timeout_s=timeout_s))
    raise ConfigError(f"unknown transport mode: {mode}")


def transport_fetch(request: HttpRequest, transport: Transport) -> RawResponse:
    """Single fetch through whichever transport mode is active."""
    return transport.fetch(request)
