"""Dataset loading and balanced sampling.

Per-format file schemas (CSV with header unless noted):
  mohx / trofi : id,sentence,target_word,label
  wg           : id,sentence,source,target          (all rows metaphorical)
  bcmtd        : id,sentence,category,label,source,target
  visual       : JSON list of {id, image_path, gold_source, gold_target,
                 gold_property, is_example?}; entries flagged is_example feed
                 the few-shot bank and are excluded from test instances.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence


class Modality(Enum):
    TEXT = "text"
    IMAGE = "image"


class BcmtdCategory(Enum):
    GENERIC_CONCEPTUAL = "conceptual"
    SCIENTIFIC = "scientific"
    LITERAL = "literal"


class FormatError(ValueError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class InsufficientClass(ValueError):
    pass


@dataclass(frozen=True)
class DatasetInstance:
    id: str
    modality: Modality
    text: Optional[str] = None
    image_ref: Optional[str] = None
    target_word: Optional[str] = None
    gold_label: Optional[bool] = None
    gold_source: Optional[str] = None
    gold_target: Optional[str] = None
    gold_property: Optional[str] = None
    category: Optional[BcmtdCategory] = None

    def __post_init__(self) -> None:
        if self.modality is Modality.TEXT and not self.text:
            raise ValueError(f"text instance {self.id} lacks a sentence")
        if self.modality is Modality.IMAGE and not self.image_ref:
            raise ValueError(f"image instance {self.id} lacks an image path")


DATASET_FORMATS = ("mohx", "trofi", "wg", "bcmtd", "visual")

_BOOL_LABELS = {
    "1": True,
    "0": False,
    "true": True,
    "false": False,
    "metaphorical": True,
    "literal": False,
    "met": True,
    "lit": False,
}


def _parse_label(raw: str, row: int) -> bool:
    try:
        return _BOOL_LABELS[raw.strip().lower()]
    except KeyError:
        raise FormatError(row, f"unrecognized label {raw!r}") from None


def load_dataset(path: str | Path, format: str) -> list[DatasetInstance]:
    if format not in DATASET_FORMATS:
        raise ValueError(f"unknown dataset format {format!r}")
    path = Path(path)
    if format == "visual":
        return _load_visual(path)
    return _load_csv(path, format)


def _load_csv(path: Path, format: str) -> list[DatasetInstance]:
    expected = {
        "mohx": ["id", "sentence", "target_word", "label"],
        "trofi": ["id", "sentence", "target_word", "label"],
        "wg": ["id", "sentence", "source", "target"],
        "bcmtd": ["id", "sentence", "category", "label", "source", "target"],
    }[format]
    instances: list[DatasetInstance] = []
    seen_ids: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise FormatError(0, f"header must be {','.join(expected)}")
        for row_no, row in enumerate(reader, start=2):
            if any(row.get(col) is None for col in expected):
                raise FormatError(row_no, "wrong number of columns")
            rid = row["id"].strip()
            if not rid:
                raise FormatError(row_no, "empty id")
            if rid in seen_ids:
                raise FormatError(row_no, f"duplicate id {rid!r}")
            seen_ids.add(rid)
            sentence = row["sentence"].strip()
            if not sentence:
                raise FormatError(row_no, "empty sentence")
            try:
                if format in ("mohx", "trofi"):
                    instances.append(
                        DatasetInstance(
                            id=rid,
                            modality=Modality.TEXT,
                            text=sentence,
                            target_word=row["target_word"].strip() or None,
                            gold_label=_parse_label(row["label"], row_no),
                        )
                    )
                elif format == "wg":
                    instances.append(
                        DatasetInstance(
                            id=rid,
                            modality=Modality.TEXT,
                            text=sentence,
                            gold_label=True,
                            gold_source=row["source"].strip() or None,
                            gold_target=row["target"].strip() or None,
                        )
                    )
                else:  # bcmtd
                    raw_cat = row["category"].strip().lower()
                    try:
                        category = BcmtdCategory(raw_cat)
                    except ValueError:
                        raise FormatError(row_no, f"unknown category {row['category']!r}") from None
                    instances.append(
                        DatasetInstance(
                            id=rid,
                            modality=Modality.TEXT,
                            text=sentence,
                            gold_label=_parse_label(row["label"], row_no),
                            gold_source=row["source"].strip() or None,
                            gold_target=row["target"].strip() or None,
                            category=category,
                        )
                    )
            except FormatError:
                raise
            except ValueError as exc:
                raise FormatError(row_no, str(exc)) from None
    return instances


def _load_visual(path: Path) -> list[DatasetInstance]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(0, f"not valid JSON: {exc}") from None
    if not isinstance(payload, list):
        raise FormatError(0, "visual manifest must be a JSON list")
    instances: list[DatasetInstance] = []
    for idx, entry in enumerate(payload, start=1):
        if not isinstance(entry, dict):
            raise FormatError(idx, "manifest entry is not an object")
        if entry.get("is_example"):
            continue  # few-shot bank material, not a test item
        try:
            instances.append(
                DatasetInstance(
                    id=str(entry["id"]),
                    modality=Modality.IMAGE,
                    image_ref=entry["image_path"],
                    gold_label=True,
                    gold_source=entry.get("gold_source"),
                    gold_target=entry.get("gold_target"),
                    gold_property=entry.get("gold_property"),
                )
            )
        except KeyError as exc:
            raise FormatError(idx, f"missing field {exc}") from None
        except ValueError as exc:
            raise FormatError(idx, str(exc)) from None
    return instances


def balanced_sample(
    instances: Sequence[DatasetInstance], n: int, seed: int
) -> list[DatasetInstance]:
    """Exactly n/2 metaphorical plus n/2 literal instances, seeded and stable.

    The same (instances, n, seed) always selects the same ids; the result is
    returned in original dataset order.
    """
    if n % 2:
        raise ValueError("sample size must be even")
    metaphorical = [i for i in instances if i.gold_label is True]
    literal = [i for i in instances if i.gold_label is False]
    half = n // 2
    if len(metaphorical) < half:
        raise InsufficientClass(f"need {half} metaphorical instances, have {len(metaphorical)}")
    if len(literal) < half:
        raise InsufficientClass(f"need {half} literal instances, have {len(literal)}")
    rng = random.Random(seed)
    chosen: set[str] = set()
    for pool in (metaphorical, literal):
        ids = sorted(i.id for i in pool)
        rng.shuffle(ids)
        chosen.update(ids[:half])
    return [i for i in instances if i.id in chosen]
