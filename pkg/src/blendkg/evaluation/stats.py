"""Agreement and correlation statistics used in the evaluation.

              P-bar - Pe-bar
Fleiss kappa = --------------
              1    - Pe-bar

where P-bar is the mean per-item agreement and Pe-bar the chance agreement
from the marginal category proportions. The point-biserial correlation uses
the population-standard-deviation form

    r = (M1 - M0) / s * sqrt(n1 * n0 / n^2)

and Spearman's rho is the Pearson correlation of tie-averaged ranks. Both
correlation p-values come from the t approximation with n-2 degrees of
freedom, which is all the reported significance thresholds require.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as scipy_stats


class TieError(ValueError):
    pass


class DegenerateMatrix(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationMatrix:
    """items x annotators table of categorical labels; rectangular, no gaps."""

    items: tuple[str, ...]
    annotators: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]  # one row of labels per item

    def __post_init__(self) -> None:
        if len(self.annotators) < 2:
            raise ValueError("need at least 2 annotators")
        if len(self.labels) != len(self.items):
            raise ValueError("one label row per item required")
        for row in self.labels:
            if len(row) != len(self.annotators):
                raise ValueError("ragged annotation matrix")
            if any(label == "" for label in row):
                raise ValueError("missing annotation cell")

    @classmethod
    def from_long_rows(cls, rows: Sequence[tuple[str, str, str]]) -> "AnnotationMatrix":
        """Build from (item_id, annotator_id, label) rows."""
        items = sorted({r[0] for r in rows})
        annotators = sorted({r[1] for r in rows})
        cells: dict[tuple[str, str], str] = {}
        for item, annotator, label in rows:
            if (item, annotator) in cells:
                raise ValueError(f"duplicate annotation for ({item}, {annotator})")
            cells[(item, annotator)] = label
        labels = []
        for item in items:
            row = []
            for annotator in annotators:
                if (item, annotator) not in cells:
                    raise ValueError(f"missing annotation for ({item}, {annotator})")
                row.append(cells[(item, annotator)])
            labels.append(tuple(row))
        return cls(items=tuple(items), annotators=tuple(annotators), labels=tuple(labels))

    def categories(self) -> list[str]:
        return sorted({label for row in self.labels for label in row})

    def counts(self) -> np.ndarray:
        """items x categories matrix of rating counts."""
        cats = {c: j for j, c in enumerate(self.categories())}
        out = np.zeros((len(self.items), len(cats)), dtype=np.int64)
        for i, row in enumerate(self.labels):
            for label in row:
                out[i, cats[label]] += 1
        return out


def majority_vote(m: AnnotationMatrix) -> list[str]:
    """Per-item modal label; ties surface as TieError, never silently broken."""
    out = []
    for item, row in zip(m.items, m.labels):
        tally: dict[str, int] = {}
        for label in row:
            tally[label] = tally.get(label, 0) + 1
        best = max(tally.values())
        winners = [label for label, count in tally.items() if count == best]
        if len(winners) > 1:
            raise TieError(f"item {item}: tie between {sorted(winners)}")
        out.append(winners[0])
    return out


def fleiss_kappa(m: AnnotationMatrix) -> float:
    if len(m.items) < 2:
        raise ValueError("need at least 2 items")
    table = m.counts().astype(float)
    n_raters = len(m.annotators)
    p_cat = table.sum(axis=0) / table.sum()
    p_expected = float(np.dot(p_cat, p_cat))
    if p_expected >= 1.0:
        raise DegenerateMatrix("all ratings fall in a single category")
    p_item = (np.square(table).sum(axis=1) - n_raters) / (n_raters * (n_raters - 1))
    p_observed = float(p_item.mean())
    return (p_observed - p_expected) / (1.0 - p_expected)


def _t_pvalue(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * np.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * scipy_stats.t.sf(t, df=n - 2))


def point_biserial(binary: Sequence[int], scores: Sequence[float]) -> tuple[float, float]:
    """(r, p). `binary` must contain both classes; `scores` must vary."""
    y = np.asarray(binary, dtype=float)
    x = np.asarray(scores, dtype=float)
    if len(y) != len(x):
        raise ValueError("inputs must have equal length")
    n = len(y)
    if n < 3:
        raise ValueError("need at least 3 observations")
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("binary input must be 0/1")
    n1 = int(y.sum())
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateInput("both classes must be present")
    s = float(x.std(ddof=0))
    if s == 0.0:
        raise DegenerateInput("scores have zero variance")
    m1 = float(x[y == 1].mean())
    m0 = float(x[y == 0].mean())
    r = (m1 - m0) / s * float(np.sqrt(n1 * n0 / (n * n)))
    return r, _t_pvalue(r, n)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """(rho, p): Pearson correlation of average-ranked data, ties averaged."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")
    rx = scipy_stats.rankdata(x, method="average")
    ry = scipy_stats.rankdata(y, method="average")
    if rx.std(ddof=0) == 0.0 or ry.std(ddof=0) == 0.0:
        raise DegenerateInput("rank variance is zero")
    rho = float(np.corrcoef(rx, ry)[0, 1])
    return rho, _t_pvalue(rho, len(x))
