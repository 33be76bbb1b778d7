"""End-to-end visual metaphor path against stub services: image -> caption ->
SKG -> multimodal prompt -> XKG -> verdict."""

from __future__ import annotations

import json
import struct
import zlib

import pytest

from blendkg.cli import main
from blendkg.evaluation.datasets import DatasetInstance, Modality, load_dataset
from blendkg.llm import GatewayMode, LlmGateway
from blendkg.pipeline import Services, run_instance
from blendkg.prompts import PromptEngine, TaskKind, preset
from blendkg.skg import CachePolicy, SkgClient, TurtleCache

from conftest import StubServer, openai_response

CAPTION = "A pair of scissors whose blades are crocodile jaws."

XKG_RESPONSE = """```turtle
@prefix ex: <http://example.org/> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix bl: <http://www.ontologydesignpatterns.org/ont/blending/blending.owl#> .
@prefix cp: <http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#> .
@prefix metanet: <https://w3id.org/framester/metanet/schema/> .

ex:image_q metanet:isMetaphorical true .
ex:Ferocity rdf:type bl:Blending .
ex:Crocodile rdf:type bl:Blendable .
ex:Crocodile rdfs:label "Crocodile" .
ex:Crocodile ex:hasBlendableRole "source" .
ex:Crocodile bl:inheritsRoleFrom ex:Ferocity .
ex:Scissors rdf:type bl:Blendable .
ex:Scissors rdfs:label "Scissors" .
ex:Scissors ex:hasBlendableRole "target" .
ex:Scissors bl:inheritsRoleFrom ex:Ferocity .
ex:BitingScissors rdf:type bl:Blended .
ex:Ferocity bl:enablesBlending ex:BitingScissors .
ex:PredatorLens rdf:type cp:Lens .
ex:CautionAttitude rdf:type cp:Attitude .
```"""

SKG_TURTLE = (
    "@prefix ex: <http://example.org/> .\n"
    "@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .\n"
    "ex:caption_1 rdf:type ex:Sentence .\n"
)


def _png() -> bytes:
    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(
            ">I", zlib.crc32(tag + data) & 0xFFFFFFFF
        )

    raw = b"\x00" + b"\x10\x20\x30" * 2
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", struct.pack(">IIBBBBB", 2, 1, 8, 2, 0, 0, 0))
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )


def _llm_responder(path, body):
    # captioning requests carry the captioning template; everything else is
    # the analysis prompt and gets the canned XKG
    text_parts = []
    for message in body["messages"]:
        content = message["content"]
        if isinstance(content, str):
            text_parts.append(content)
        else:
            text_parts.extend(p.get("text", "") for p in content if p.get("type") == "text")
    joined = "\n".join(text_parts)
    if "Describe this image" in joined:
        return openai_response(CAPTION)
    return openai_response(XKG_RESPONSE)


@pytest.fixture
def llm_stub():
    server = StubServer()
    server.responder = _llm_responder
    yield server
    server.close()


@pytest.fixture
def skg_stub():
    server = StubServer()
    server.responder = lambda path, body: (200, "text/turtle", SKG_TURTLE)
    yield server
    server.close()


def test_visual_run_instance(tmp_path, llm_stub, skg_stub):
    image_path = tmp_path / "query.png"
    image_path.write_bytes(_png())
    engine = PromptEngine(model_id="m-vis", version="v1")
    services = Services(
        skg=SkgClient(cache=TurtleCache(tmp_path / "cache")),
        llm=LlmGateway(base_url=llm_stub.url),
        skg_url=skg_stub.url,
        model_id="m-vis",
        llm_mode=GatewayMode.LIVE,
        cache_policy=CachePolicy.CACHE_FIRST,
    )
    instance = DatasetInstance(id="v-1", modality=Modality.IMAGE, image_ref=str(image_path))
    cfg = engine.visual_config(preset("sent-img"))
    record = run_instance(
        instance, TaskKind.VISUAL_UNDERSTANDING, cfg, services, engine, "sent-img"
    )
    assert record.error is None, record.error
    assert record.caption == CAPTION
    assert record.skg is not None  # built from the caption
    assert skg_stub.requests[0][1] == {"text": CAPTION}
    assert record.verdict.metaphorical is True
    assert record.verdict.source_label == "Crocodile"
    assert record.verdict.target_label == "Scissors"
    assert record.verdict.property_label == "ferocity"
    assert record.validation.passed
    # caption call plus analysis call
    assert len(llm_stub.requests) == 2


def test_visual_no_sent_preset_omits_caption_channel(tmp_path, llm_stub, skg_stub):
    image_path = tmp_path / "query.png"
    image_path.write_bytes(_png())
    engine = PromptEngine(model_id="m-vis", version="v1")
    services = Services(
        skg=SkgClient(cache=TurtleCache(tmp_path / "cache")),
        llm=LlmGateway(base_url=llm_stub.url),
        skg_url=skg_stub.url,
        model_id="m-vis",
        llm_mode=GatewayMode.LIVE,
        cache_policy=CachePolicy.CACHE_FIRST,
    )
    instance = DatasetInstance(id="v-2", modality=Modality.IMAGE, image_ref=str(image_path))
    cfg = engine.visual_config(preset("no-sent"))
    record = run_instance(
        instance, TaskKind.VISUAL_UNDERSTANDING, cfg, services, engine, "no-sent"
    )
    assert record.error is None
    # the caption is still computed (the SKG needs it) but kept out of the prompt
    assert record.caption == CAPTION
    analysis_body = llm_stub.requests[-1][1]
    text = json.dumps(analysis_body)
    assert "Description of the image" not in text


def test_visual_image_decode_failure_is_caption_stage_error(tmp_path, llm_stub, skg_stub):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    engine = PromptEngine(model_id="m-vis", version="v1")
    services = Services(
        skg=SkgClient(cache=TurtleCache(tmp_path / "cache")),
        llm=LlmGateway(base_url=llm_stub.url),
        skg_url=skg_stub.url,
        model_id="m-vis",
        llm_mode=GatewayMode.LIVE,
        cache_policy=CachePolicy.CACHE_FIRST,
    )
    instance = DatasetInstance(id="v-3", modality=Modality.IMAGE, image_ref=str(bad))
    cfg = engine.visual_config(preset("sent-img"))
    record = run_instance(
        instance, TaskKind.VISUAL_UNDERSTANDING, cfg, services, engine, "sent-img"
    )
    assert record.error is not None
    assert record.error.stage == "caption"
    assert record.error.code == "ImageDecodeError"


def test_visual_cli_command(tmp_path, llm_stub, skg_stub, capsys):
    image_path = tmp_path / "query.png"
    image_path.write_bytes(_png())
    code = main(
        [
            "visual",
            str(image_path),
            "--preset", "sent-img",
            "--mode", "live",
            "--model", "m-vis",
            "--llm-base-url", llm_stub.url,
            "--skg-url", skg_stub.url,
            "--cache-dir", str(tmp_path / "cache"),
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert f"caption: {CAPTION}" in out
    assert "metaphorical: true" in out
    assert "source: Crocodile" in out
    assert "property: ferocity" in out


def test_visual_dataset_roundtrip_through_loader(tmp_path, llm_stub, skg_stub):
    image_path = tmp_path / "img.png"
    image_path.write_bytes(_png())
    manifest = tmp_path / "visual.json"
    manifest.write_text(
        json.dumps(
            [
                {
                    "id": "vm-1",
                    "image_path": str(image_path),
                    "gold_source": "crocodile",
                    "gold_target": "scissors",
                    "gold_property": "ferocity",
                }
            ]
        )
    )
    instances = load_dataset(manifest, "visual")
    assert len(instances) == 1
    engine = PromptEngine(model_id="m-vis", version="v1")
    services = Services(
        skg=SkgClient(cache=TurtleCache(tmp_path / "cache")),
        llm=LlmGateway(base_url=llm_stub.url),
        skg_url=skg_stub.url,
        model_id="m-vis",
        llm_mode=GatewayMode.LIVE,
        cache_policy=CachePolicy.CACHE_FIRST,
    )
    cfg = engine.visual_config(preset("no-img"))
    record = run_instance(
        instances[0], TaskKind.VISUAL_UNDERSTANDING, cfg, services, engine, "no-img"
    )
    assert record.error is None
    # predicted property matches the gold annotation via exact matching
    from blendkg.evaluation import exact_match_scorer

    assert exact_match_scorer(record.verdict.property_label, instances[0].gold_property) > 0
