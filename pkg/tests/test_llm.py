from __future__ import annotations

import json

import pytest

from blendkg.llm import (
    AuthError,
    ChatMessage,
    ChatRequest,
    GatewayMode,
    LlmGateway,
    NoTurtleFound,
    RateLimited,
    ReplayMiss,
    ResponseMode,
    ResponseStore,
    ServiceError,
    extract_turtle_block,
)
from blendkg.rdf import parse_turtle

from conftest import openai_response


def _request(text="hello", model="m1", images=()):
    return ChatRequest(model_id=model, messages=(ChatMessage(role="user", text=text, images=images),))


def test_request_key_stable_and_content_sensitive():
    assert _request().key() == _request().key()
    assert _request().key() != _request(text="other").key()
    assert _request().key() != _request(model="m2").key()
    img = b"\x89PNG\r\n\x1a\nxxxx"
    assert _request(images=(img,)).key() != _request().key()
    assert _request(images=(img,)).key() == _request(images=(img,)).key()


def test_replay_miss(tmp_path):
    gateway = LlmGateway(store=ResponseStore(tmp_path / "rec.jsonl"))
    with pytest.raises(ReplayMiss):
        gateway.complete(_request(), GatewayMode.REPLAY)


def test_record_then_replay_single_network_call(tmp_path, stub_server):
    stub_server.responder = lambda path, body: openai_response("OK")
    store = ResponseStore(tmp_path / "rec.jsonl")
    gateway = LlmGateway(base_url=stub_server.url, store=store)
    first = gateway.complete(_request(), GatewayMode.RECORD)
    second = gateway.complete(_request(), GatewayMode.REPLAY)
    assert first.text == second.text == "OK"
    assert first.mode is ResponseMode.LIVE
    assert second.mode is ResponseMode.REPLAYED
    assert len(stub_server.requests) == 1  # call-count spy


def test_replay_survives_process_restart(tmp_path, stub_server):
    stub_server.responder = lambda path, body: openai_response("persisted")
    path = tmp_path / "rec.jsonl"
    LlmGateway(base_url=stub_server.url, store=ResponseStore(path)).complete(
        _request(), GatewayMode.RECORD
    )
    # a fresh store instance stands in for a new process
    replayed = LlmGateway(store=ResponseStore(path)).complete(_request(), GatewayMode.REPLAY)
    assert replayed.text == "persisted"


def test_auth_and_service_errors(tmp_path, stub_server):
    stub_server.responder = lambda path, body: (401, "application/json", "{}")
    gateway = LlmGateway(base_url=stub_server.url)
    with pytest.raises(AuthError):
        gateway.complete(_request())
    stub_server.responder = lambda path, body: (500, "text/plain", "boom")
    with pytest.raises(ServiceError):
        gateway.complete(_request())


def test_rate_limit_honored_then_surfaced(stub_server, monkeypatch):
    calls = {"n": 0}

    def responder(path, body):
        calls["n"] += 1
        if calls["n"] < 3:
            return 429, "application/json", "{}"
        return openai_response("finally")

    stub_server.responder = responder
    monkeypatch.setattr("blendkg.llm.time.sleep", lambda s: None)
    gateway = LlmGateway(base_url=stub_server.url)
    assert gateway.complete(_request()).text == "finally"

    calls["n"] = -100  # force exhaustion of the retry budget
    stub_server.responder = lambda path, body: (429, "application/json", "{}")
    with pytest.raises(RateLimited):
        gateway.complete(_request())


def test_anthropic_adapter(stub_server):
    def responder(path, body):
        assert path == "/v1/messages"
        assert body["system"].startswith("sys")
        assert body["messages"][0]["content"][0]["type"] == "text"
        return 200, "application/json", json.dumps(
            {"content": [{"type": "text", "text": "claude-style"}], "usage": {}}
        )

    stub_server.responder = responder
    gateway = LlmGateway(base_url=stub_server.url, provider="anthropic")
    request = ChatRequest(
        model_id="m",
        messages=(
            ChatMessage(role="system", text="sys prompt"),
            ChatMessage(role="user", text="hi"),
        ),
    )
    assert gateway.complete(request).text == "claude-style"


def test_extract_turtle_block_labeled_fence():
    text = "Here:\n```turtle\nex:a ex:b ex:c .\n```"
    assert extract_turtle_block(text) == "ex:a ex:b ex:c ."


def test_extract_turtle_block_whole_text():
    assert extract_turtle_block("ex:a ex:b ex:c .") == "ex:a ex:b ex:c ."


def test_extract_turtle_block_no_turtle():
    with pytest.raises(NoTurtleFound):
        extract_turtle_block("no graph here")


def test_extract_turtle_block_skips_unparseable_fences():
    text = (
        "```python\nprint('hi')\n```\n"
        "```ttl\nex:a ex:b ex:c .\n```\n"
    )
    assert extract_turtle_block(text) == "ex:a ex:b ex:c ."


def test_extract_turtle_block_prefers_labeled_over_earlier_plain():
    text = "```\nnot turtle at all\n```\n```turtle\nex:a ex:b ex:c .\n```"
    assert extract_turtle_block(text) == "ex:a ex:b ex:c ."


def test_extracted_block_always_parses():
    texts = [
        "```turtle\n@prefix ex: <http://x/> .\nex:a ex:b ex:c .\n```",
        "ex:a ex:b ex:c .",
        "prose\n```ttl\nex:s metanet:isMetaphorical true .\n```\nmore prose",
    ]
    for text in texts:
        parse_turtle(extract_turtle_block(text))
