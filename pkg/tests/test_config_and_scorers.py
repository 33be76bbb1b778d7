from __future__ import annotations

import json
import threading
import time

import pytest

from blendkg.config import AppConfig, load_config
from blendkg.evaluation import HttpScorer, ScorerError, score_understanding
from blendkg.evaluation.datasets import DatasetInstance, Modality
from blendkg.llm import TokenBucket
from blendkg.ontology import MetaphoricityVerdict
from blendkg.pipeline import PipelineRecord
from blendkg.prompts import TaskKind
from blendkg.rdf import Iri


def test_defaults():
    cfg = AppConfig()
    assert cfg.mode == "live"
    assert cfg.template_version == "v1"
    assert cfg.parallelism == 1


def test_config_file_env_and_override_precedence(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"model_id": "from-file", "llm_base_url": "http://file/"}))
    monkeypatch.setenv("LLM_BASE_URL", "http://env/")
    cfg = load_config(str(path), {"model_id": "from-flag", "mode": None})
    assert cfg.llm_base_url == "http://env/"  # env beats file
    assert cfg.model_id == "from-flag"  # flag beats file
    assert cfg.mode == "live"  # None override leaves the default


def test_config_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"nonsense": true}')
    with pytest.raises(ValueError):
        load_config(str(path))


def test_config_missing_file():
    with pytest.raises(FileNotFoundError):
        load_config("/does/not/exist.json")


def test_config_echo_has_manifest_shape():
    echo = AppConfig(model_id="m", skg_url="http://s/").echo()
    assert echo["model_id"] == "m"
    assert "cache_dir" in echo


def _gold(instance_id):
    return DatasetInstance(
        id=instance_id,
        modality=Modality.TEXT,
        text="s",
        gold_label=True,
        gold_source="fire",
        gold_target="anger",
    )


def _record(instance_id, source, target):
    record = PipelineRecord(
        instance_id=instance_id, task=TaskKind.DETECTION, preset="lag", template_version="v1"
    )
    record.verdict = MetaphoricityVerdict(
        metaphorical=True,
        evidence_node=Iri("http://example.org/s"),
        source_label=source,
        target_label=target,
    )
    return record


def test_http_scorer_against_stub(stub_server):
    def responder(path, body):
        score = 1.0 if body["candidate"] == body["reference"] else -0.5
        return 200, "application/json", json.dumps({"score": score})

    stub_server.responder = responder
    scorer = HttpScorer(stub_server.url)
    result = score_understanding([_record("a", "fire", "anger")], [_gold("a")], scorer)
    assert result.success_rate == 1.0
    result = score_understanding([_record("a", "fire", "calm")], [_gold("a")], scorer)
    assert result.success_rate == 0.0


def test_http_scorer_failure_propagates_as_scorer_error(stub_server):
    stub_server.responder = lambda path, body: (500, "text/plain", "down")
    scorer = HttpScorer(stub_server.url)
    with pytest.raises(ScorerError):
        score_understanding([_record("a", "fire", "anger")], [_gold("a")], scorer)


def test_token_bucket_spaces_out_excess_calls():
    bucket = TokenBucket(requests_per_minute=6000)  # 100/s: burst of 6000 then refill
    start = time.monotonic()
    for _ in range(10):
        bucket.acquire()
    assert time.monotonic() - start < 0.5  # within the initial burst

    slow = TokenBucket(requests_per_minute=60)  # 1/s refill after the burst
    slow.tokens = 1.0  # drain the burst allowance
    slow.acquire()
    t0 = time.monotonic()
    slow.acquire()  # must wait for ~1s of refill
    assert time.monotonic() - t0 > 0.5


def test_token_bucket_thread_safe_counts():
    bucket = TokenBucket(requests_per_minute=100_000)
    done = []

    def worker():
        for _ in range(50):
            bucket.acquire()
        done.append(1)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(done) == 8
