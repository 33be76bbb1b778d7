"""Deterministic plain-text and CSV report rendering.

Percentages render at one decimal with a trailing ".0" dropped, matching the
mixed precision of published comparison tables ("89.7" but "67"). Columns
join with " & " so rows can be pasted into table sources directly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Union


def fmt_pct(value: float) -> str:
    text = f"{value:.1f}"
    return text[:-2] if text.endswith(".0") else text


def fmt_corr(value: float) -> str:
    return f"{value:.3f}"


def fmt_p(p: float) -> str:
    return "p < 0.001" if p < 0.001 else f"p = {p:.3f}"


@dataclass(frozen=True)
class MethodRow:
    name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class MethodTable:
    """Per-method percentage rows, e.g. detection F1/accuracy comparisons."""

    title: str
    columns: tuple[str, ...]
    rows: tuple[MethodRow, ...]

    def render_lines(self) -> list[str]:
        lines = [self.title, "Method & " + " & ".join(self.columns)]
        for row in self.rows:
            lines.append(row.name + " & " + " & ".join(fmt_pct(v) for v in row.values))
        return lines

    def csv_rows(self) -> list[list[str]]:
        out = [["method", *self.columns]]
        for row in self.rows:
            out.append([row.name, *[fmt_pct(v) for v in row.values]])
        return out


@dataclass(frozen=True)
class CorrelationBlock:
    title: str
    entries: tuple[tuple[str, float, float], ...]  # (label, coefficient, p)

    def render_lines(self) -> list[str]:
        lines = [self.title]
        for label, value, p in self.entries:
            lines.append(f"{label} & {fmt_corr(value)} & {fmt_p(p)}")
        return lines

    def csv_rows(self) -> list[list[str]]:
        out = [["correlation", "coefficient", "p"]]
        for label, value, p in self.entries:
            out.append([label, fmt_corr(value), fmt_p(p)])
        return out


@dataclass(frozen=True)
class AgreementBlock:
    title: str
    entries: tuple[tuple[str, float], ...]  # (task label, kappa)

    def render_lines(self) -> list[str]:
        lines = [self.title]
        for label, kappa in self.entries:
            lines.append(f"{label} & {kappa:.2f}")
        if len(self.entries) > 1:
            mean = sum(k for _, k in self.entries) / len(self.entries)
            lines.append(f"average & {mean:.2f}")
        return lines

    def csv_rows(self) -> list[list[str]]:
        out = [["task", "fleiss_kappa"]]
        for label, kappa in self.entries:
            out.append([label, f"{kappa:.2f}"])
        return out


@dataclass(frozen=True)
class DistributionBlock:
    title: str
    distribution: dict[str, float]

    def render_lines(self) -> list[str]:
        lines = [self.title]
        ordered = sorted(self.distribution.items(), key=lambda kv: (-kv[1], kv[0]))
        for category, pct in ordered:
            lines.append(f"{category} & {fmt_pct(pct)}")
        return lines

    def csv_rows(self) -> list[list[str]]:
        out = [["category", "percent"]]
        for category, pct in sorted(self.distribution.items(), key=lambda kv: (-kv[1], kv[0])):
            out.append([category, fmt_pct(pct)])
        return out


Block = Union[MethodTable, CorrelationBlock, AgreementBlock, DistributionBlock]


def render_report(*blocks: Block) -> str:
    """Plain-text rendering; empty input renders an empty report."""
    if not blocks:
        return ""
    parts = ["\n".join(b.render_lines()) for b in blocks]
    return "\n\n".join(parts) + "\n"


def render_report_csv(*blocks: Block) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for i, block in enumerate(blocks):
        if i:
            writer.writerow([])
        for row in block.csv_rows():
            writer.writerow(row)
    return buffer.getvalue()
