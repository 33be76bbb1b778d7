"""Gold comparison: detection metrics, understanding success, error tallies.

Error records count as wrong predictions in detection scoring: a system that
fails to answer has not detected the metaphor. Understanding succeeds only
when both the predicted source and the predicted target score positively
(strictly > 0) against the gold labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import requests

from ..pipeline import PipelineRecord
from .datasets import DatasetInstance


class JoinError(ValueError):
    pass


class ScorerError(RuntimeError):
    pass


class UnknownCategory(ValueError):
    pass


TEXT_ERROR_CATEGORIES = (
    "WrongSubelementMapping",
    "TooSpecific",
    "TooGeneral",
    "SwitchedSourceTarget",
    "LiteralAsMetaphor",
)
VISUAL_ERROR_CATEGORIES = (
    "IncorrectObjects",
    "IncorrectProperty",
    "IncorrectTargetSymbol",
)


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class DetectionScore:
    accuracy: float
    f1: float
    confusion: Confusion
    error_records: int = 0


def _gold_by_id(gold: Sequence[DatasetInstance]) -> dict[str, DatasetInstance]:
    index: dict[str, DatasetInstance] = {}
    for instance in gold:
        if instance.id in index:
            raise JoinError(f"duplicate gold id {instance.id!r}")
        index[instance.id] = instance
    return index


def score_detection(
    records: Sequence[PipelineRecord], gold: Sequence[DatasetInstance]
) -> DetectionScore:
    """Accuracy and F1 with metaphorical as the positive class."""
    index = _gold_by_id(gold)
    tp = fp = tn = fn = 0
    errors = 0
    seen: set[str] = set()
    for record in records:
        if record.instance_id in seen:
            raise JoinError(f"duplicate record id {record.instance_id!r}")
        seen.add(record.instance_id)
        instance = index.get(record.instance_id)
        if instance is None:
            raise JoinError(f"record id {record.instance_id!r} not present in gold")
        if instance.gold_label is None:
            raise JoinError(f"gold instance {instance.id!r} lacks a label")
        if record.verdict is None:
            errors += 1
            predicted = not instance.gold_label  # failure to answer scores as wrong
        else:
            predicted = record.verdict.metaphorical
        if instance.gold_label and predicted:
            tp += 1
        elif instance.gold_label and not predicted:
            fn += 1
        elif not instance.gold_label and predicted:
            fp += 1
        else:
            tn += 1
    confusion = Confusion(tp=tp, fp=fp, tn=tn, fn=fn)
    n = confusion.n
    accuracy = (tp + tn) / n if n else 0.0
    denominator = 2 * tp + fp + fn
    f1 = (2 * tp / denominator) if denominator else 0.0
    return DetectionScore(accuracy=accuracy, f1=f1, confusion=confusion, error_records=errors)


Scorer = Callable[[str, str], float]


def exact_match_scorer(candidate: str, reference: str) -> float:
    """1.0 on case/whitespace-insensitive equality, else -1.0."""
    return 1.0 if candidate.strip().lower() == reference.strip().lower() else -1.0


class HttpScorer:
    """POST {"candidate", "reference"} -> {"score": x} against a scoring service."""

    def __init__(self, url: str, timeout: float = 60.0, session=None):
        self.url = url
        self.timeout = timeout
        self.session = session or requests.Session()

    def __call__(self, candidate: str, reference: str) -> float:
        try:
            resp = self.session.post(
                self.url,
                json={"candidate": candidate, "reference": reference},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return float(resp.json()["score"])
        except (requests.RequestException, ValueError, KeyError, TypeError) as exc:
            raise ScorerError(f"similarity scorer failed: {exc}") from exc


@dataclass(frozen=True)
class InstanceUnderstanding:
    instance_id: str
    source_score: Optional[float]
    target_score: Optional[float]
    success: bool


@dataclass(frozen=True)
class UnderstandingScore:
    success_rate: float
    per_instance: tuple[InstanceUnderstanding, ...]


def score_understanding(
    records: Sequence[PipelineRecord],
    gold: Sequence[DatasetInstance],
    scorer: Scorer,
) -> UnderstandingScore:
    """Success = scorer(pred_source, gold_source) > 0 AND same for target."""
    index = _gold_by_id(gold)
    results: list[InstanceUnderstanding] = []
    for record in records:
        instance = index.get(record.instance_id)
        if instance is None:
            raise JoinError(f"record id {record.instance_id!r} not present in gold")
        if instance.gold_source is None or instance.gold_target is None:
            raise JoinError(f"gold instance {instance.id!r} lacks source/target labels")
        pred_source = record.verdict.source_label if record.verdict else None
        pred_target = record.verdict.target_label if record.verdict else None
        if pred_source is None or pred_target is None:
            results.append(InstanceUnderstanding(record.instance_id, None, None, False))
            continue
        s_score = scorer(pred_source, instance.gold_source)
        t_score = scorer(pred_target, instance.gold_target)
        results.append(
            InstanceUnderstanding(
                record.instance_id, s_score, t_score, s_score > 0 and t_score > 0
            )
        )
    rate = sum(1 for r in results if r.success) / len(results) if results else 0.0
    return UnderstandingScore(success_rate=rate, per_instance=tuple(results))


def category_success_rates(
    result: UnderstandingScore, gold: Sequence[DatasetInstance]
) -> dict[str, float]:
    """Per-category success-rate breakdown for datasets that carry categories."""
    index = _gold_by_id(gold)
    counts: dict[str, int] = {}
    wins: dict[str, int] = {}
    for item in result.per_instance:
        instance = index.get(item.instance_id)
        if instance is None or instance.category is None:
            continue
        key = instance.category.value
        counts[key] = counts.get(key, 0) + 1
        if item.success:
            wins[key] = wins.get(key, 0) + 1
    return {key: wins.get(key, 0) / counts[key] for key in sorted(counts)}


def tally_errors(tagged: Sequence[tuple[str, str]]) -> dict[str, float]:
    """Percentage distribution (summing to 100) of tagged error categories.

    Accepts the textual and visual taxonomies; anything else raises
    UnknownCategory.
    """
    allowed = set(TEXT_ERROR_CATEGORIES) | set(VISUAL_ERROR_CATEGORIES)
    counts: dict[str, int] = {}
    for instance_id, category in tagged:
        if category not in allowed:
            raise UnknownCategory(f"{instance_id}: unknown error category {category!r}")
        counts[category] = counts.get(category, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return {}
    return {category: counts[category] / total * 100.0 for category in sorted(counts)}
