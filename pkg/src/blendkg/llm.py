"""Chat-completion gateway with live/record/replay modes.

One request shape covers every provider; thin adapters translate it to the
OpenAI-style or Anthropic-style wire format. Recordings are JSON-lines keyed
by a content hash of the request, so replayed runs are hermetic and
byte-stable across process restarts. API keys come only from the
environment (`LLM_API_KEY`), never from config files.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import requests

from .rdf import Graph, PrefixMap, parse_turtle
from .rdf.turtle import TurtleSyntaxError, UnknownPrefixError

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 4096


class GatewayMode(Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


class ResponseMode(Enum):
    LIVE = "live"
    REPLAYED = "replayed"


class AuthError(RuntimeError):
    pass


class RateLimited(RuntimeError):
    def __init__(self, retry_after: float):
        super().__init__(f"rate limited, retry after {retry_after}s")
        self.retry_after = retry_after


class ServiceError(RuntimeError):
    pass


class ReplayMiss(KeyError):
    pass


class NoTurtleFound(ValueError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    text: str
    images: tuple[bytes, ...] = ()


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0  # greedy decoding everywhere in the pipeline
    max_tokens: int = DEFAULT_MAX_TOKENS

    def key(self) -> str:
        """Stable content hash; images contribute through their digests."""
        payload = {
            "model_id": self.model_id,
            "messages": [
                {
                    "role": m.role,
                    "text": m.text,
                    "images": [hashlib.sha256(img).hexdigest() for img in m.images],
                }
                for m in self.messages
            ],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    text: str
    model_id: str
    usage: dict = field(default_factory=dict)
    mode: ResponseMode = ResponseMode.LIVE


class ResponseStore:
    """Append-only JSON-lines store of recorded responses, keyed by request hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._entries[entry["key"]] = entry["response"]

    def get(self, key: str) -> Optional[dict]:
        return self._entries.get(key)

    def put(self, key: str, response: dict) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            line = json.dumps({"key": key, "response": response}, sort_keys=True, ensure_ascii=False)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def __len__(self) -> int:
        return len(self._entries)


class TokenBucket:
    """Requests-per-minute limiter shared by concurrent callers."""

    def __init__(self, requests_per_minute: int):
        self.capacity = max(1, requests_per_minute)
        self.tokens = float(self.capacity)
        self.fill_rate = self.capacity / 60.0
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.fill_rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.fill_rate
            time.sleep(wait)


def _openai_payload(req: ChatRequest) -> dict:
    messages = []
    for m in req.messages:
        if m.images:
            content: list[dict] = [{"type": "text", "text": m.text}]
            for img in m.images:
                b64 = base64.b64encode(img).decode("ascii")
                content.append(
                    {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
                )
            messages.append({"role": m.role, "content": content})
        else:
            messages.append({"role": m.role, "content": m.text})
    return {
        "model": req.model_id,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }


def _anthropic_payload(req: ChatRequest) -> dict:
    system_parts = [m.text for m in req.messages if m.role == "system"]
    messages = []
    for m in req.messages:
        if m.role == "system":
            continue
        content: list[dict] = [{"type": "text", "text": m.text}]
        for img in m.images:
            content.append(
                {
                    "type": "image",
                    "source": {
                        "type": "base64",
                        "media_type": "image/png",
                        "data": base64.b64encode(img).decode("ascii"),
                    },
                }
            )
        messages.append({"role": m.role, "content": content})
    payload = {
        "model": req.model_id,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }
    if system_parts:
        payload["system"] = "\n\n".join(system_parts)
    return payload


def _extract_openai_text(body: dict) -> tuple[str, dict]:
    text = body["choices"][0]["message"]["content"] or ""
    usage = body.get("usage", {})
    return text, {
        "input_tokens": usage.get("prompt_tokens", 0),
        "output_tokens": usage.get("completion_tokens", 0),
    }


def _extract_anthropic_text(body: dict) -> tuple[str, dict]:
    blocks = body.get("content", [])
    text = "".join(b.get("text", "") for b in blocks if b.get("type") == "text")
    usage = body.get("usage", {})
    return text, {
        "input_tokens": usage.get("input_tokens", 0),
        "output_tokens": usage.get("output_tokens", 0),
    }


class LlmGateway:
    """Shared client for one chat-completion endpoint.

    `provider` selects the wire adapter ("openai" or "anthropic"). The store
    is required for RECORD and REPLAY modes.
    """

    MAX_RATE_LIMIT_RETRIES = 5

    def __init__(
        self,
        base_url: str = "",
        provider: str = "openai",
        api_key: Optional[str] = None,
        store: Optional[ResponseStore] = None,
        requests_per_minute: Optional[int] = None,
        timeout: float = 120.0,
        session: Optional[requests.Session] = None,
    ):
        if provider not in ("openai", "anthropic"):
            raise ValueError(f"unknown provider {provider!r}")
        self.base_url = base_url.rstrip("/")
        self.provider = provider
        self.api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY", "")
        self.store = store
        self.limiter = TokenBucket(requests_per_minute) if requests_per_minute else None
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, req: ChatRequest, mode: GatewayMode = GatewayMode.LIVE) -> ChatResponse:
        key = req.key()
        if mode is GatewayMode.REPLAY:
            if self.store is None:
                raise ReplayMiss("no response store configured")
            entry = self.store.get(key)
            if entry is None:
                raise ReplayMiss(key)
            return ChatResponse(
                text=entry["text"],
                model_id=entry.get("model_id", req.model_id),
                usage=entry.get("usage", {}),
                mode=ResponseMode.REPLAYED,
            )

        response = self._call(req)
        if mode is GatewayMode.RECORD:
            if self.store is None:
                raise ValueError("record mode requires a response store")
            self.store.put(
                key, {"text": response.text, "model_id": response.model_id, "usage": response.usage}
            )
        return response

    def _call(self, req: ChatRequest) -> ChatResponse:
        if self.limiter is not None:
            self.limiter.acquire()
        if self.provider == "openai":
            url = f"{self.base_url}/chat/completions"
            payload = _openai_payload(req)
            headers = {"Authorization": f"Bearer {self.api_key}"}
            extract = _extract_openai_text
        else:
            url = f"{self.base_url}/v1/messages"
            payload = _anthropic_payload(req)
            headers = {"x-api-key": self.api_key, "anthropic-version": "2023-06-01"}
            extract = _extract_anthropic_text

        retries = 0
        while True:
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                raise ServiceError(f"request failed: {exc}") from exc
            if resp.status_code in (401, 403):
                raise AuthError(f"authentication failed ({resp.status_code})")
            if resp.status_code == 429:
                retry_after = float(resp.headers.get("Retry-After", "1"))
                if retries >= self.MAX_RATE_LIMIT_RETRIES:
                    raise RateLimited(retry_after)
                retries += 1
                logger.warning("rate limited; sleeping %.1fs (retry %d)", retry_after, retries)
                time.sleep(retry_after)
                continue
            if resp.status_code >= 400:
                raise ServiceError(f"service returned {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
                text, usage = extract(body)
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ServiceError(f"malformed service response: {exc}") from exc
            return ChatResponse(text=text, model_id=req.model_id, usage=usage, mode=ResponseMode.LIVE)


_FENCE = re.compile(r"```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\r?\n(.*?)```", re.DOTALL)


def extract_turtle_block(response_text: str, defaults: Optional[PrefixMap] = None) -> str:
    """Pull the Turtle payload out of an LLM response.

    Candidates in order: fenced blocks labeled turtle/ttl, any other fenced
    block, then the whole text. The first candidate that parses wins, so the
    returned string always satisfies parse_turtle. Raises NoTurtleFound when
    every candidate fails.
    """
    labeled: list[str] = []
    unlabeled: list[str] = []
    for m in _FENCE.finditer(response_text):
        lang = m.group(1).lower()
        body = m.group(2)
        if lang in ("turtle", "ttl"):
            labeled.append(body)
        else:
            unlabeled.append(body)
    for candidate in labeled + unlabeled + [response_text]:
        candidate = candidate.strip()
        if not candidate:
            continue
        try:
            parse_turtle(candidate, defaults)
        except (TurtleSyntaxError, UnknownPrefixError, ValueError):
            continue
        return candidate
    raise NoTurtleFound("response contains no parseable Turtle")


def parse_response_graph(response_text: str, defaults: Optional[PrefixMap] = None) -> Graph:
    return parse_turtle(extract_turtle_block(response_text, defaults), defaults)
