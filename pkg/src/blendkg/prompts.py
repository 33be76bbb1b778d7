"""Deterministic prompt construction for every task variant and ablation.

Templates are plain-text files with $name placeholders, loaded once per
engine and immutable afterwards; rendering is a pure function of
(inputs, template version), so identical inputs yield byte-identical
requests. Ablations drop whole blocks: NoBlending removes the ontology
heuristics (and swaps the worked example for one without blend triples),
NoGraph removes the serialized knowledge graph.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from string import Template
from typing import Optional

from .llm import ChatMessage, ChatRequest
from .rdf import Graph, serialize_turtle

DEFAULT_TEMPLATE_VERSION = "v1"
FEWSHOT_SIZES = (0, 3, 6, 12)


class TaskKind(Enum):
    DETECTION = "detection"
    CONCEPTUAL_UNDERSTANDING = "conceptual_understanding"
    VISUAL_UNDERSTANDING = "visual_understanding"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Example:
    """One worked example: an input (text and/or image) plus its rendered answer."""

    annotation: str
    text: Optional[str] = None
    image_path: Optional[str] = None
    image_bytes: Optional[bytes] = None


@dataclass(frozen=True)
class PromptConfig:
    include_graph: bool = True
    include_blending: bool = True
    include_sentence: bool = True  # visual task only
    include_image: bool = True  # visual task only
    few_shot: tuple[Example, ...] = ()
    target_word: Optional[str] = None

    def for_visual(self) -> "PromptConfig":
        if not (self.include_image or self.include_sentence):
            raise ConfigError("visual prompts need at least one of image or sentence")
        return self


PRESETS: dict[str, PromptConfig] = {
    # text tasks
    "lag": PromptConfig(include_graph=True, include_blending=True),
    "no-blending": PromptConfig(include_graph=True, include_blending=False),
    "no-graph": PromptConfig(include_graph=False, include_blending=True),
    # visual channel ablations
    "sent-img": PromptConfig(include_sentence=True, include_image=True),
    "no-sent": PromptConfig(include_sentence=False, include_image=True),
    "no-img": PromptConfig(include_sentence=True, include_image=False),
}


def preset(name: str) -> PromptConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def packaged_templates_dir() -> Path:
    return Path(str(importlib.resources.files("blendkg"))) / "templates"


class PromptEngine:
    """Loads one template version and builds chat requests from it."""

    def __init__(
        self,
        model_id: str,
        templates_dir: Optional[str | Path] = None,
        version: str = DEFAULT_TEMPLATE_VERSION,
    ):
        self.model_id = model_id
        self.version = version
        root = Path(templates_dir) if templates_dir is not None else packaged_templates_dir()
        self.root = root
        vdir = root / version
        if not vdir.is_dir():
            raise ConfigError(f"template version {version!r} not found under {root}")
        self._t: dict[str, str] = {}
        for path in sorted(vdir.iterdir()):
            if path.is_file():
                self._t[path.name] = path.read_text(encoding="utf-8")
        self._examples_dir = root / "examples"

    def _template(self, name: str) -> str:
        try:
            return self._t[name]
        except KeyError:
            raise ConfigError(f"template {name!r} missing from version {self.version}") from None

    def _fill(self, name: str, **values: str) -> str:
        return Template(self._template(name)).substitute(**values)

    def captioning_prompt(self) -> str:
        return self._template("captioning.txt").strip()

    def repair_instruction(self) -> str:
        return self._template("repair_instruction.txt").strip()

    def worked_example(self, with_blend: bool) -> str:
        base = self._template("example_base.ttl").strip()
        if not with_blend:
            return base
        return base + "\n\n" + self._template("example_blend_extension.ttl").strip()

    def _graph_block(self, skg: Graph) -> str:
        return self._fill("graph_block.txt", skg_turtle=serialize_turtle(skg).strip())

    def _contract(self, cfg: PromptConfig) -> str:
        parts = [self._template("output_contract.txt").strip()]
        if cfg.include_blending:
            parts.append(self._template("output_contract_blending.txt").strip())
        return "\n\n".join(parts)

    def build_text_prompt(
        self, sentence: str, skg: Optional[Graph], cfg: PromptConfig
    ) -> ChatRequest:
        """Prompt for sentence-level detection/understanding under any ablation."""
        if cfg.include_graph and skg is None:
            raise ConfigError("preset includes the knowledge graph but none was supplied")
        target_clause = (
            f'Focus on the word "{cfg.target_word}" when judging metaphoricity.\n'
            if cfg.target_word
            else ""
        )
        sections = [
            self._fill("text_instructions.txt", sentence=sentence, target_clause=target_clause).strip()
        ]
        if cfg.include_blending:
            sections.append(self._template("blending_heuristics.txt").strip())
        if cfg.include_graph and skg is not None:
            sections.append(self._graph_block(skg).strip())
        sections.append(
            self._template("example_leadin.txt").strip()
            + "\n\n```turtle\n"
            + self.worked_example(with_blend=cfg.include_blending)
            + "\n```"
        )
        sections.append(self._contract(cfg))
        text = "\n\n".join(sections) + "\n"
        return ChatRequest(model_id=self.model_id, messages=(ChatMessage(role="user", text=text),))

    def build_visual_prompt(
        self,
        image: Optional[bytes],
        caption: Optional[str],
        skg: Optional[Graph],
        cfg: PromptConfig,
    ) -> ChatRequest:
        """Multimodal prompt: three worked examples, then the query channels."""
        cfg.for_visual()
        if len(cfg.few_shot) != 3:
            raise ConfigError(f"visual prompts require exactly 3 examples, got {len(cfg.few_shot)}")
        if cfg.include_image and image is None:
            raise ConfigError("preset includes the image but none was supplied")
        if cfg.include_sentence and caption is None:
            raise ConfigError("preset includes the sentence but no caption was supplied")
        if cfg.include_graph and skg is None:
            raise ConfigError("preset includes the knowledge graph but none was supplied")

        sections = [self._template("visual_instructions.txt").strip()]
        images: list[bytes] = []
        for i, example in enumerate(cfg.few_shot, start=1):
            block = [f"Example {i}:"]
            if example.image_bytes is not None:
                images.append(example.image_bytes)
                block.append("(example image attached in order)")
            if example.text:
                block.append(f'Description: "{example.text}"')
            block.append(f"Correct analysis:\n{example.annotation.strip()}")
            sections.append("\n".join(block))
        if cfg.include_blending:
            sections.append(self._template("blending_heuristics.txt").strip())

        query = ["Now analyze the new input."]
        if cfg.include_image and image is not None:
            images.append(image)
            query.append("The image to analyze is the last attached image.")
        if cfg.include_sentence and caption is not None:
            query.append(f'Description of the image: "{caption}"')
        sections.append("\n".join(query))
        if cfg.include_graph and skg is not None:
            sections.append(self._graph_block(skg).strip())
        sections.append(
            "State the source, the target, and the blending property that links "
            "them as labeled nodes in the output graph."
        )
        sections.append(self._contract(cfg))
        text = "\n\n".join(sections) + "\n"
        return ChatRequest(
            model_id=self.model_id,
            messages=(ChatMessage(role="user", text=text, images=tuple(images)),),
        )

    def build_fewshot_baseline(self, sentence: str, k: int) -> ChatRequest:
        """Plain prompt with k bank examples and no graph or blending content."""
        if k not in FEWSHOT_SIZES:
            raise ConfigError(f"k must be one of {FEWSHOT_SIZES}, got {k}")
        bank = self.baseline_bank()
        if len(bank) < k:
            raise ConfigError(f"example bank holds {len(bank)} entries, {k} requested")
        blocks = "".join(
            f'\nSentence: "{entry.text}"\nAnswer: {entry.annotation}\n' for entry in bank[:k]
        )
        text = self._fill("fewshot_instructions.txt", example_blocks=blocks, sentence=sentence)
        return ChatRequest(model_id=self.model_id, messages=(ChatMessage(role="user", text=text),))

    def baseline_bank(self) -> tuple[Example, ...]:
        payload = json.loads(
            (self._examples_dir / "baseline_bank.json").read_text(encoding="utf-8")
        )
        return tuple(Example(text=e["text"], annotation=e["label"]) for e in payload)

    def visual_examples(self) -> tuple[Example, ...]:
        """The three shipped visual examples, with image bytes loaded."""
        payload = json.loads(
            (self._examples_dir / "visual_examples.json").read_text(encoding="utf-8")
        )
        out = []
        for e in payload:
            image_path = self._examples_dir / e["image"]
            out.append(
                Example(
                    text=e["caption"],
                    annotation=e["annotation"],
                    image_path=str(image_path),
                    image_bytes=image_path.read_bytes(),
                )
            )
        return tuple(out)

    def visual_config(self, cfg: PromptConfig) -> PromptConfig:
        """Attach the shipped example set to a visual preset."""
        return replace(cfg, few_shot=self.visual_examples())
