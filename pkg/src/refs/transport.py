"""HTTP transport abstraction: live requests, fixture playback, and recording.

Resolvers never touch a socket directly; they hand an HttpRequest to a
transport. Tests replay recorded fixtures, so the whole suite runs offline
and deterministically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .errors import FixtureMissingError, TransportTimeoutError


@dataclass(frozen=True)
class HttpRequest:
    method: str
    url: str
    headers: dict[str, str] = field(default_factory=dict)
    body: bytes | None = None

    @property
    def accept(self) -> str:
        for name, value in self.headers.items():
            if name.lower() == "accept":
                return value
        return ""


@dataclass(frozen=True)
class HttpResponse:
    status: int
    headers: dict[str, str] = field(default_factory=dict)
    body: bytes = b""

    def text(self) -> str:
        return self.body.decode("utf-8")

    def json(self) -> object:
        return json.loads(self.body.decode("utf-8"))


class Transport(Protocol):
    is_live: bool

    def execute(self, request: HttpRequest) -> HttpResponse: ...


class LiveTransport:
    """Real HTTP via requests, following redirects to depth 10."""

    is_live = True

    def __init__(self, timeout: float = 30.0):
        import requests

        self.timeout = timeout
        self._session = requests.Session()
        self._session.max_redirects = 10

    def execute(self, request: HttpRequest) -> HttpResponse:
        import requests

        try:
            resp = self._session.request(
                request.method,
                request.url,
                headers=request.headers,
                data=request.body,
                timeout=self.timeout,
                allow_redirects=True,
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise TransportTimeoutError(f"{request.method} {request.url}: {exc}") from exc
        return HttpResponse(
            status=resp.status_code,
            headers=dict(resp.headers),
            body=resp.content,
        )


def _request_key(method: str, url: str, accept: str) -> tuple[str, str, str]:
    return (method.upper(), url, accept)


class FixtureTransport:
    """Deterministic playback of recorded (request, response) pairs.

    Responses are keyed on (method, url, accept header); when several
    recordings share a key, a recorded request body disambiguates. No
    network I/O ever happens here.
    """

    is_live = False

    def __init__(self, entries: Iterable[dict] | None = None):
        self._entries: dict[tuple[str, str, str], list[dict]] = {}
        for entry in entries or []:
            self.add(entry)

    def add(self, entry: dict) -> None:
        req = entry["request"]
        key = _request_key(req.get("method", "GET"), req["url"], req.get("accept", ""))
        self._entries.setdefault(key, []).append(entry)

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureTransport":
        transport = cls()
        transport.load_file(path)
        return transport

    @classmethod
    def from_dir(cls, path: str | Path) -> "FixtureTransport":
        """Load every .json archive under a directory."""
        transport = cls()
        files = sorted(Path(path).glob("*.json"))
        if not files:
            raise FixtureMissingError(f"no fixture archives in {path}")
        for f in files:
            transport.load_file(f)
        return transport

    def load_file(self, path: str | Path) -> None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        for entry in data["entries"]:
            self.add(entry)

    def execute(self, request: HttpRequest) -> HttpResponse:
        key = _request_key(request.method, request.url, request.accept)
        candidates = self._entries.get(key, [])
        match = None
        for entry in candidates:
            recorded_body = entry["request"].get("body")
            if recorded_body is None:
                if match is None:
                    match = entry
            elif request.body is not None and recorded_body == request.body.decode("utf-8"):
                match = entry
                break
        if match is None:
            raise FixtureMissingError(
                f"no fixture for {request.method} {request.url} (accept={request.accept!r})"
            )
        resp = match["response"]
        return HttpResponse(
            status=resp["status"],
            headers=resp.get("headers", {}),
            body=resp.get("body", "").encode("utf-8"),
        )


class RecordingTransport:
    """Wraps a live transport and appends each exchange to a fixture archive.

    Recording is opt-in: construct one explicitly (or pass --record-fixtures
    to the CLI). The archive is the same JSON shape FixtureTransport reads.
    """

    is_live = True

    def __init__(self, inner: Transport, archive_path: str | Path):
        self._inner = inner
        self._path = Path(archive_path)

    def execute(self, request: HttpRequest) -> HttpResponse:
        response = self._inner.execute(request)
        entry = {
            "request": {
                "method": request.method.upper(),
                "url": request.url,
                "accept": request.accept,
            },
            "response": {
                "status": response.status,
                "headers": {
                    k: v
                    for k, v in response.headers.items()
                    if k.lower() in ("content-type",)
                },
                "body": response.body.decode("utf-8", errors="replace"),
            },
        }
        if request.body is not None:
            entry["request"]["body"] = request.body.decode("utf-8", errors="replace")
        self._append(entry)
        return response

    def _append(self, entry: dict) -> None:
        if self._path.exists():
            data = json.loads(self._path.read_text(encoding="utf-8"))
        else:
            data = {"entries": []}
        data["entries"].append(entry)
        self._path.write_text(
            json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
