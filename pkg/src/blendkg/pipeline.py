"""End-to-end orchestration: input -> (caption) -> SKG -> prompt -> LLM ->
Turtle extraction -> merge -> validate -> verdict/blend -> record.

run_instance never throws: every failure is embedded in the record with its
stage and code, so a dataset run always yields one record per instance.
Malformed LLM output triggers up to two repair retries with an appended
instruction before the failure is recorded. run_dataset writes records
incrementally as JSON-lines in input order and can resume by skipping
instance ids already present in the run directory.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import ontology
from .llm import ChatMessage, ChatRequest, GatewayMode, LlmGateway, NoTurtleFound, extract_turtle_block
from .ontology import (
    BlendStructure,
    MetaphoricityVerdict,
    ValidationLevel,
    ValidationReport,
)
from .prompts import PromptConfig, PromptEngine, TaskKind
from .rdf import Graph, default_prefixes, merge, parse_turtle, serialize_turtle
from .rdf.turtle import TurtleSyntaxError, UnknownPrefixError
from .skg import CachePolicy, SkgClient, SkgRequest, caption_image

logger = logging.getLogger(__name__)

REPAIR_RETRIES = 2


@dataclass(frozen=True)
class StageError:
    stage: str
    code: str
    message: str


@dataclass
class PipelineRecord:
    instance_id: str
    task: TaskKind
    preset: str
    template_version: str
    sentence: Optional[str] = None
    image_ref: Optional[str] = None
    caption: Optional[str] = None
    skg: Optional[Graph] = None
    prompt_hash: str = ""
    raw_response: str = ""
    xkg: Optional[Graph] = None
    validation: Optional[ValidationReport] = None
    verdict: Optional[MetaphoricityVerdict] = None
    blend: Optional[BlendStructure] = None
    error: Optional[StageError] = None
    timings: dict[str, float] = field(default_factory=dict)
    llm_attempts: int = 0
    # transient, not serialized: rendered prompt text for the prompts/ sink
    prompt_text: str = field(default="", repr=False, compare=False)

    @property
    def completed(self) -> bool:
        return self.error is None and self.verdict is not None

    def to_json_dict(self) -> dict:
        verdict = None
        if self.verdict is not None:
            verdict = {
                "metaphorical": self.verdict.metaphorical,
                "evidence_node": _term_repr(self.verdict.evidence_node),
                "source_label": self.verdict.source_label,
                "target_label": self.verdict.target_label,
                "property_label": self.verdict.property_label,
            }
        validation = None
        if self.validation is not None:
            validation = {
                "level": self.validation.level.value,
                "passed": self.validation.passed,
                "findings": [
                    {
                        "code": f.code,
                        "severity": f.severity.value,
                        "node": _term_repr(f.node) if f.node is not None else None,
                        "message": f.message,
                    }
                    for f in self.validation.findings
                ],
            }
        blend = None
        if self.blend is not None:
            blend = {
                "blending_label": self.blend.blending_label,
                "blending_property": self.blend.blending_property,
                "blendables": [
                    {"label": b.label, "role_marker": b.role_marker}
                    for b in self.blend.blendables
                ],
                "blended_label": self.blend.blended_label,
                "lens_label": self.blend.lens[1] if self.blend.lens else None,
                "attitude_label": self.blend.attitude[1] if self.blend.attitude else None,
            }
        return {
            "instance_id": self.instance_id,
            "task": self.task.value,
            "preset": self.preset,
            "template_version": self.template_version,
            "sentence": self.sentence,
            "image_ref": self.image_ref,
            "caption": self.caption,
            "skg_ttl": serialize_turtle(self.skg) if self.skg is not None else None,
            "prompt_hash": self.prompt_hash,
            "raw_response": self.raw_response,
            "xkg_ttl": serialize_turtle(self.xkg) if self.xkg is not None else None,
            "validation": validation,
            "verdict": verdict,
            "blend": blend,
            "error": dataclasses.asdict(self.error) if self.error is not None else None,
            "timings": self.timings,
            "llm_attempts": self.llm_attempts,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json_dict(cls, data: dict) -> "PipelineRecord":
        verdict = None
        if data.get("verdict") is not None:
            v = data["verdict"]
            verdict = MetaphoricityVerdict(
                metaphorical=v["metaphorical"],
                evidence_node=_term_from_repr(v.get("evidence_node", "")),
                source_label=v.get("source_label"),
                target_label=v.get("target_label"),
                property_label=v.get("property_label"),
            )
        validation = None
        if data.get("validation") is not None:
            raw = data["validation"]
            validation = ValidationReport(
                level=ValidationLevel(raw["level"]),
                passed=raw["passed"],
                findings=tuple(
                    ontology.Finding(
                        code=f["code"],
                        severity=ontology.Severity(f["severity"]),
                        node=_term_from_repr(f["node"]) if f.get("node") else None,
                        message=f.get("message", ""),
                    )
                    for f in raw.get("findings", ())
                ),
            )
        error = None
        if data.get("error") is not None:
            error = StageError(**data["error"])
        return cls(
            instance_id=data["instance_id"],
            task=TaskKind(data["task"]),
            preset=data["preset"],
            template_version=data.get("template_version", ""),
            sentence=data.get("sentence"),
            image_ref=data.get("image_ref"),
            caption=data.get("caption"),
            skg=parse_turtle(data["skg_ttl"]) if data.get("skg_ttl") else None,
            prompt_hash=data.get("prompt_hash", ""),
            raw_response=data.get("raw_response", ""),
            xkg=parse_turtle(data["xkg_ttl"]) if data.get("xkg_ttl") else None,
            validation=validation,
            verdict=verdict,
            blend=None,  # structural blend is re-extractable from xkg when needed
            error=error,
            timings=data.get("timings", {}),
            llm_attempts=data.get("llm_attempts", 0),
        )

    def comparable_dict(self) -> dict:
        """Record content with volatile fields (timings) removed."""
        data = self.to_json_dict()
        data.pop("timings", None)
        return data


def _term_repr(term) -> str:
    from .rdf import BlankNode, Iri, Literal

    if isinstance(term, Iri):
        return term.value
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    if isinstance(term, Literal):
        return term.lexical
    return str(term)


def _term_from_repr(text: str):
    from .rdf import BlankNode, Iri, Literal

    if text.startswith("_:"):
        return BlankNode(text[2:])
    try:
        return Iri(text)
    except ValueError:
        return Literal(text)


@dataclass(frozen=True)
class Services:
    skg: SkgClient
    llm: LlmGateway
    skg_url: str
    model_id: str
    llm_mode: GatewayMode = GatewayMode.LIVE
    cache_policy: CachePolicy = CachePolicy.CACHE_FIRST


@dataclass
class RunManifest:
    dataset_id: str
    preset: str
    model_id: str
    skg_url: str
    cache_mode: str
    seed: int
    started_at: str
    record_count: int = 0
    template_version: str = ""
    task: str = ""
    repair_retries: int = REPAIR_RETRIES
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


class _Timer:
    def __init__(self, timings: dict[str, float], stage: str):
        self.timings = timings
        self.stage = stage

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.timings[self.stage] = self.timings.get(self.stage, 0.0) + (
            time.perf_counter() - self.start
        )
        return False


def run_instance(
    instance,
    task: TaskKind,
    cfg: PromptConfig,
    services: Services,
    engine: PromptEngine,
    preset_name: str = "",
) -> PipelineRecord:
    """Process one dataset instance through every stage; failures become the record's error."""
    record = PipelineRecord(
        instance_id=instance.id,
        task=task,
        preset=preset_name,
        template_version=engine.version,
        sentence=getattr(instance, "text", None),
        image_ref=getattr(instance, "image_ref", None),
    )
    timings = record.timings

    image_bytes: Optional[bytes] = None
    try:
        # stage: caption (visual inputs only)
        text_for_skg = record.sentence
        if task is TaskKind.VISUAL_UNDERSTANDING:
            with _Timer(timings, "caption"):
                image_bytes = Path(instance.image_ref).read_bytes()
                record.caption = caption_image(
                    image_bytes,
                    services.llm,
                    services.model_id,
                    services.llm_mode,
                    prompt=engine.captioning_prompt(),
                )
                text_for_skg = record.caption
    except Exception as exc:
        record.error = StageError("caption", type(exc).__name__, str(exc))
        return record

    try:
        # stage: skg
        if cfg.include_graph:
            with _Timer(timings, "skg"):
                record.skg = services.skg.fetch_skg(
                    SkgRequest(
                        text=text_for_skg,
                        service_url=services.skg_url,
                        cache_policy=services.cache_policy,
                    )
                )
    except Exception as exc:
        record.error = StageError("skg", type(exc).__name__, str(exc))
        return record

    try:
        # stage: prompt
        with _Timer(timings, "prompt"):
            if task is TaskKind.VISUAL_UNDERSTANDING:
                request = engine.build_visual_prompt(
                    image_bytes if cfg.include_image else None,
                    record.caption if cfg.include_sentence else None,
                    record.skg,
                    cfg,
                )
            else:
                request = engine.build_text_prompt(record.sentence or "", record.skg, cfg)
            record.prompt_hash = request.key()
            record.prompt_text = "\n\n".join(
                f"[{m.role}]\n{m.text}" for m in request.messages
            )
    except Exception as exc:
        record.error = StageError("prompt", type(exc).__name__, str(exc))
        return record

    # stages: llm + extract, with bounded repair retries on malformed output
    llm_graph: Optional[Graph] = None
    extract_failure: Optional[Exception] = None
    current = request
    for attempt in range(1 + REPAIR_RETRIES):
        try:
            with _Timer(timings, "llm"):
                response = services.llm.complete(current, services.llm_mode)
                record.llm_attempts = attempt + 1
                record.raw_response = response.text
        except Exception as exc:
            record.error = StageError("llm", type(exc).__name__, str(exc))
            return record
        try:
            with _Timer(timings, "extract"):
                block = extract_turtle_block(response.text, default_prefixes())
                llm_graph = parse_turtle(block, default_prefixes())
            break
        except (NoTurtleFound, TurtleSyntaxError, UnknownPrefixError) as exc:
            extract_failure = exc
            if attempt < REPAIR_RETRIES:
                current = ChatRequest(
                    model_id=current.model_id,
                    messages=current.messages
                    + (
                        ChatMessage(role="assistant", text=response.text),
                        ChatMessage(role="user", text=engine.repair_instruction()),
                    ),
                    temperature=current.temperature,
                    max_tokens=current.max_tokens,
                )
    if llm_graph is None:
        exc = extract_failure or NoTurtleFound("no turtle in response")
        code = "NoTurtleFound" if isinstance(exc, NoTurtleFound) else type(exc).__name__
        record.error = StageError("extract", code, str(exc))
        return record

    # stage: merge + validate + verdict
    with _Timer(timings, "validate"):
        record.xkg = merge(record.skg, llm_graph) if record.skg is not None else llm_graph
        record.validation = ontology.validate_xkg(record.xkg, ValidationLevel.STRICT)
    try:
        with _Timer(timings, "verdict"):
            record.verdict = ontology.extract_verdict(record.xkg)
            if record.verdict.metaphorical and record.validation.passed:
                record.blend = ontology.extract_blend(record.xkg)
    except Exception as exc:
        record.error = StageError("verdict", type(exc).__name__, str(exc))
        return record
    return record


def load_recorded_ids(run_dir: str | Path) -> set[str]:
    records_path = Path(run_dir) / "records.jsonl"
    ids: set[str] = set()
    if records_path.exists():
        for line in records_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                ids.add(json.loads(line)["instance_id"])
    return ids


def load_records(run_dir: str | Path) -> list[PipelineRecord]:
    records_path = Path(run_dir) / "records.jsonl"
    out = []
    if records_path.exists():
        for line in records_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                out.append(PipelineRecord.from_json_dict(json.loads(line)))
    return out


def run_dataset(
    instances: Sequence,
    task: TaskKind,
    cfg: PromptConfig,
    services: Services,
    engine: PromptEngine,
    run_dir: str | Path,
    preset_name: str = "",
    parallelism: int = 1,
    dataset_id: str = "",
    seed: int = 0,
    config_echo: Optional[dict] = None,
) -> RunManifest:
    """Process a dataset into run_dir: manifest.json + records.jsonl + prompts/.

    Instances whose ids already appear in records.jsonl are skipped, so an
    interrupted run resumes where it stopped. Records are appended in input
    order regardless of worker completion order.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    run_path = Path(run_dir)
    run_path.mkdir(parents=True, exist_ok=True)
    prompts_dir = run_path / "prompts"
    prompts_dir.mkdir(exist_ok=True)
    manifest_path = run_path / "manifest.json"

    if manifest_path.exists():
        manifest = RunManifest.from_json(manifest_path.read_text(encoding="utf-8"))
        if manifest.preset != preset_name or manifest.model_id != services.model_id:
            raise ValueError("run directory was started with a different configuration")
    else:
        manifest = RunManifest(
            dataset_id=dataset_id,
            preset=preset_name,
            model_id=services.model_id,
            skg_url=services.skg_url,
            cache_mode=services.cache_policy.value,
            seed=seed,
            started_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            template_version=engine.version,
            task=task.value,
            config=config_echo or {},
        )
        manifest_path.write_text(manifest.to_json(), encoding="utf-8")

    done = load_recorded_ids(run_path)
    pending = [inst for inst in instances if inst.id not in done]
    logger.info("run: %d instances, %d already recorded", len(instances), len(done))

    def work(inst) -> PipelineRecord:
        return run_instance(inst, task, cfg, services, engine, preset_name=preset_name)

    records_path = run_path / "records.jsonl"
    with records_path.open("a", encoding="utf-8") as sink:
        if parallelism == 1:
            for inst in pending:
                record = work(inst)
                _write_record(sink, prompts_dir, record)
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = [(inst.id, pool.submit(work, inst)) for inst in pending]
                for _, future in futures:  # input order, not completion order
                    _write_record(sink, prompts_dir, future.result())

    manifest.record_count = len(load_recorded_ids(run_path))
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def _write_record(sink, prompts_dir: Path, record: PipelineRecord) -> None:
    sink.write(record.to_json() + "\n")
    sink.flush()
    if record.prompt_hash and record.prompt_text:
        prompt_file = prompts_dir / f"{record.prompt_hash}.txt"
        if not prompt_file.exists():
            prompt_file.write_text(record.prompt_text, encoding="utf-8")
