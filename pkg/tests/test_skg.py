from __future__ import annotations

import random
import string

import pytest

from blendkg.llm import GatewayMode, LlmGateway, ResponseStore
from blendkg.skg import (
    BadServiceResponse,
    CacheMiss,
    CachePolicy,
    EmptyCaption,
    ImageDecodeError,
    ServiceUnavailable,
    SkgClient,
    SkgRequest,
    TurtleCache,
    cache_key,
    caption_image,
)

from conftest import openai_response

PNG = b"\x89PNG\r\n\x1a\n" + b"\x00" * 16


def test_request_invariants():
    with pytest.raises(ValueError):
        SkgRequest(text="   ", service_url="http://x/")
    with pytest.raises(ValueError):
        SkgRequest(text="x" * 2001, service_url="http://x/")


def test_cache_key_depends_on_url_and_text():
    assert cache_key("http://a/", "t") == cache_key("http://a/", "t")
    assert cache_key("http://a/", "t") != cache_key("http://b/", "t")
    assert cache_key("http://a/", "t") != cache_key("http://a/", "u")


def test_cache_keys_unique_over_random_texts():
    rng = random.Random(11)
    texts = {
        "".join(rng.choices(string.ascii_letters + " ", k=rng.randint(1, 60)))
        for _ in range(300)
    }
    keys = {cache_key("http://svc/", t) for t in texts}
    assert len(keys) == len(texts)


def test_replay_only_with_seeded_cache(tmp_path):
    cache = TurtleCache(tmp_path)
    url = "http://svc/"
    text = "Crime has infected communities everywhere."
    cache.put(cache_key(url, text), "ex:a ex:b ex:c .", url, text)
    client = SkgClient(cache=cache)
    g = client.fetch_skg(SkgRequest(text=text, service_url=url, cache_policy=CachePolicy.REPLAY_ONLY))
    assert len(g) == 1


def test_replay_only_empty_cache_misses(tmp_path):
    client = SkgClient(cache=TurtleCache(tmp_path))
    with pytest.raises(CacheMiss):
        client.fetch_skg(
            SkgRequest(text="x", service_url="http://svc/", cache_policy=CachePolicy.REPLAY_ONLY)
        )


def test_live_against_stub(stub_server, tmp_path):
    stub_server.responder = lambda path, body: (200, "text/turtle", "ex:a ex:b ex:c .")
    client = SkgClient(cache=TurtleCache(tmp_path))
    g = client.fetch_skg(
        SkgRequest(text="hello", service_url=stub_server.url, cache_policy=CachePolicy.LIVE)
    )
    assert len(g) == 1
    assert stub_server.requests[0][1] == {"text": "hello"}


def test_cache_first_fetches_once(stub_server, tmp_path):
    stub_server.responder = lambda path, body: (200, "text/turtle", "ex:a ex:b ex:c .")
    client = SkgClient(cache=TurtleCache(tmp_path))
    req = SkgRequest(text="same", service_url=stub_server.url, cache_policy=CachePolicy.CACHE_FIRST)
    g1 = client.fetch_skg(req)
    g2 = client.fetch_skg(req)
    assert g1.triples == g2.triples
    assert len(stub_server.requests) == 1


def test_transient_5xx_retried(stub_server, tmp_path):
    state = {"n": 0}

    def responder(path, body):
        state["n"] += 1
        if state["n"] < 3:
            return 503, "text/plain", "down"
        return 200, "text/turtle", "ex:a ex:b ex:c ."

    stub_server.responder = responder
    client = SkgClient(cache=TurtleCache(tmp_path), sleep=lambda s: None)
    g = client.fetch_skg(
        SkgRequest(text="x", service_url=stub_server.url, cache_policy=CachePolicy.LIVE)
    )
    assert len(g) == 1
    assert state["n"] == 3


def test_persistent_5xx_exhausts_retries(stub_server, tmp_path):
    stub_server.responder = lambda path, body: (500, "text/plain", "down")
    client = SkgClient(cache=TurtleCache(tmp_path), sleep=lambda s: None)
    with pytest.raises(ServiceUnavailable):
        client.fetch_skg(
            SkgRequest(text="x", service_url=stub_server.url, cache_policy=CachePolicy.LIVE)
        )
    assert len(stub_server.requests) == 3


def test_4xx_is_not_retried(stub_server, tmp_path):
    stub_server.responder = lambda path, body: (422, "text/plain", "bad input")
    client = SkgClient(cache=TurtleCache(tmp_path), sleep=lambda s: None)
    with pytest.raises(BadServiceResponse):
        client.fetch_skg(
            SkgRequest(text="x", service_url=stub_server.url, cache_policy=CachePolicy.LIVE)
        )
    assert len(stub_server.requests) == 1


def test_non_turtle_payload_rejected_and_not_cached(stub_server, tmp_path):
    stub_server.responder = lambda path, body: (200, "text/html", "<html>oops</html>")
    cache = TurtleCache(tmp_path)
    client = SkgClient(cache=cache)
    with pytest.raises(BadServiceResponse):
        client.fetch_skg(
            SkgRequest(text="x", service_url=stub_server.url, cache_policy=CachePolicy.CACHE_FIRST)
        )
    assert cache.entries() == []


def test_cache_listing_and_clear(tmp_path):
    cache = TurtleCache(tmp_path)
    cache.put(cache_key("http://svc/", "a"), "ex:a ex:b ex:c .", "http://svc/", "a")
    cache.put(cache_key("http://svc/", "b"), "ex:d ex:e ex:f .", "http://svc/", "b")
    assert len(cache.entries()) == 2
    assert cache.clear() == 2
    assert cache.entries() == []


def test_caption_image_replayed(stub_server, tmp_path):
    stub_server.responder = lambda path, body: openai_response("a red square on white")
    store = ResponseStore(tmp_path / "rec.jsonl")
    gateway = LlmGateway(base_url=stub_server.url, store=store)
    live = caption_image(PNG, gateway, "m1", GatewayMode.RECORD)
    replayed = caption_image(PNG, gateway, "m1", GatewayMode.REPLAY)
    assert live == replayed == "a red square on white"
    assert len(stub_server.requests) == 1


def test_caption_image_rejects_non_image():
    with pytest.raises(ImageDecodeError):
        caption_image(b"", LlmGateway(), "m1")
    with pytest.raises(ImageDecodeError):
        caption_image(b"GIF89a....", LlmGateway(), "m1")


def test_caption_image_empty_caption(stub_server):
    stub_server.responder = lambda path, body: openai_response("   ")
    gateway = LlmGateway(base_url=stub_server.url)
    with pytest.raises(EmptyCaption):
        caption_image(PNG, gateway, "m1")
