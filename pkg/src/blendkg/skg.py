"""Client for the external text-to-knowledge-graph service, plus image captioning.

The service is consumed over HTTP (POST {"text": ...} -> text/turtle). A
content-addressed cache of Turtle files makes runs replayable and
human-inspectable: one .ttl file per (service_url, text) pair plus a JSON
index. Cache writes are atomic (write-temp-then-rename).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import requests

from .llm import ChatMessage, ChatRequest, GatewayMode, LlmGateway
from .rdf import Graph, PrefixMap, default_prefixes, parse_turtle
from .rdf.turtle import TurtleSyntaxError, UnknownPrefixError

logger = logging.getLogger(__name__)

MAX_TEXT_LENGTH = 2000


class CachePolicy(Enum):
    LIVE = "live"
    CACHE_FIRST = "cache_first"
    REPLAY_ONLY = "replay_only"


class ServiceUnavailable(RuntimeError):
    pass


class BadServiceResponse(RuntimeError):
    pass


class CacheMiss(KeyError):
    pass


class EmptyCaption(ValueError):
    pass


class ImageDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class SkgRequest:
    text: str
    service_url: str
    cache_policy: CachePolicy = CachePolicy.CACHE_FIRST

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("request text is empty")
        if len(self.text) > MAX_TEXT_LENGTH:
            raise ValueError(f"request text exceeds {MAX_TEXT_LENGTH} characters")


def cache_key(service_url: str, text: str) -> str:
    digest = hashlib.sha256()
    digest.update(service_url.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(text.encode("utf-8"))
    return digest.hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    turtle: str
    fetched_at: float


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class TurtleCache:
    """Directory of <key>.ttl files plus an index.json with request metadata."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.index_path = self.directory / "index.json"
        self._lock = threading.Lock()

    def _load_index(self) -> dict[str, dict]:
        if self.index_path.exists():
            return json.loads(self.index_path.read_text(encoding="utf-8"))
        return {}

    def get(self, key: str) -> Optional[CacheEntry]:
        path = self.directory / f"{key}.ttl"
        if not path.exists():
            return None
        meta = self._load_index().get(key, {})
        return CacheEntry(
            key=key, turtle=path.read_text(encoding="utf-8"), fetched_at=meta.get("fetched_at", 0.0)
        )

    def put(self, key: str, turtle: str, service_url: str, text: str) -> CacheEntry:
        entry = CacheEntry(key=key, turtle=turtle, fetched_at=time.time())
        _atomic_write(self.directory / f"{key}.ttl", turtle)
        with self._lock:  # index read-modify-write must not drop parallel entries
            index = self._load_index()
            index[key] = {"service_url": service_url, "text": text, "fetched_at": entry.fetched_at}
            _atomic_write(self.index_path, json.dumps(index, indent=2, sort_keys=True))
        return entry

    def entries(self) -> list[dict]:
        index = self._load_index()
        return [dict(meta, key=key) for key, meta in sorted(index.items())]

    def clear(self) -> int:
        count = 0
        if not self.directory.exists():
            return 0
        for path in self.directory.glob("*.ttl"):
            path.unlink()
            count += 1
        if self.index_path.exists():
            self.index_path.unlink()
        return count


class SkgClient:
    """Fetches base semantic graphs for sentences, with cache/replay control."""

    RETRIES = 3
    BACKOFF_SECONDS = 0.5

    def __init__(
        self,
        cache: Optional[TurtleCache] = None,
        defaults: Optional[PrefixMap] = None,
        timeout: float = 60.0,
        session: Optional[requests.Session] = None,
        sleep=time.sleep,
    ):
        self.cache = cache
        self.defaults = defaults if defaults is not None else default_prefixes()
        self.timeout = timeout
        self.session = session or requests.Session()
        self._sleep = sleep

    def fetch_skg(self, req: SkgRequest) -> Graph:
        key = cache_key(req.service_url, req.text)
        if req.cache_policy in (CachePolicy.CACHE_FIRST, CachePolicy.REPLAY_ONLY):
            entry = self.cache.get(key) if self.cache is not None else None
            if entry is not None:
                return self._parse(entry.turtle)
            if req.cache_policy is CachePolicy.REPLAY_ONLY:
                raise CacheMiss(f"no cached graph for {req.text!r}")

        turtle = self._fetch_live(req)
        graph = self._parse(turtle)  # reject non-Turtle before caching it
        if req.cache_policy is CachePolicy.CACHE_FIRST and self.cache is not None:
            self.cache.put(key, turtle, req.service_url, req.text)
        return graph

    def _parse(self, turtle: str) -> Graph:
        try:
            return parse_turtle(turtle, self.defaults)
        except (TurtleSyntaxError, UnknownPrefixError) as exc:
            raise BadServiceResponse(f"service payload is not Turtle: {exc}") from exc

    def _fetch_live(self, req: SkgRequest) -> str:
        last_error: Optional[Exception] = None
        for attempt in range(self.RETRIES):
            if attempt:
                self._sleep(self.BACKOFF_SECONDS * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(
                    req.service_url,
                    json={"text": req.text},
                    headers={"Accept": "text/turtle"},
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("skg request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code >= 500:
                last_error = ServiceUnavailable(f"service returned {resp.status_code}")
                continue
            if resp.status_code >= 400:
                # caller error: retrying cannot help
                raise BadServiceResponse(f"service rejected request ({resp.status_code})")
            return resp.text
        raise ServiceUnavailable(f"service unreachable after {self.RETRIES} attempts: {last_error}")


_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


def caption_image(
    image: bytes,
    llm: LlmGateway,
    model_id: str,
    mode: GatewayMode = GatewayMode.LIVE,
    prompt: Optional[str] = None,
) -> str:
    """Natural-language description of the image, suitable as fetch_skg input.

    The default prompt is the versioned captioning template shipped with the
    package, so captions are reproducible across runs.
    """
    if not (image.startswith(_PNG_MAGIC) or image.startswith(_JPEG_MAGIC)):
        raise ImageDecodeError("image is not PNG or JPEG")
    if prompt is None:
        from .prompts import DEFAULT_TEMPLATE_VERSION, packaged_templates_dir

        template = packaged_templates_dir() / DEFAULT_TEMPLATE_VERSION / "captioning.txt"
        prompt = template.read_text(encoding="utf-8").strip()
    request = ChatRequest(
        model_id=model_id,
        messages=(ChatMessage(role="user", text=prompt, images=(image,)),),
    )
    response = llm.complete(request, mode)
    caption = response.text.strip()
    if not caption:
        raise EmptyCaption("model returned an empty description")
    return caption
