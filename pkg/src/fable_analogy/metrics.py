"""Accuracy, F1, Cohen's kappa and Pearson correlation over analogy labels.

Statistics that are undefined for the given data come back as ``nan`` and
are rendered as flagged cells by the report writers; they are never
replaced by zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import DIMENSIONS, AnalogyDimension, PairAnnotation, RatingSet
from .errors import (
    EmptyCounts,
    EmptyItems,
    ItemMismatch,
    LengthMismatch,
    TooFewAnnotations,
    ZeroVariance,
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def f1_defined(self) -> bool:
        return (self.tp + self.fp + self.fn) > 0

    @classmethod
    def from_labels(cls, y_true: Sequence[bool], y_pred: Sequence[bool]) -> "ConfusionCounts":
        if len(y_true) != len(y_pred):
            raise LengthMismatch("label vectors differ in length")
        tp = fp = fn = tn = 0
        for t, p in zip(y_true, y_pred):
            t, p = bool(t), bool(p)
            if t and p:
                tp += 1
            elif p:
                fp += 1
            elif t:
                fn += 1
            else:
                tn += 1
        return cls(tp, fp, fn, tn)


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise EmptyCounts("no predictions to score")
    return (c.tp + c.tn) / c.total


def f1(c: ConfusionCounts) -> float:
    """Positive-class F1. Zero when there are no positives at all; check
    ``c.f1_defined`` to tell that case apart from a real zero."""
    if c.total == 0:
        raise EmptyCounts("no predictions to score")
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 0.0
    return 2 * c.tp / denom


# ---------------------------------------------------------------------------
# agreement

def kappa_from_labels(a: Sequence[bool], b: Sequence[bool]) -> float:
    if len(a) != len(b):
        raise ItemMismatch("raters labelled different numbers of items")
    n = len(a)
    if n == 0:
        raise EmptyItems("no items to compare")
    agree = sum(bool(x) == bool(y) for x, y in zip(a, b))
    p_o = agree / n
    pa = sum(bool(x) for x in a) / n
    pb = sum(bool(y) for y in b) / n
    p_e = pa * pb + (1 - pa) * (1 - pb)
    if p_e == 1.0:
        # both raters constant and equal; only perfect agreement is meaningful
        return 1.0 if agree == n else math.nan
    return (p_o - p_e) / (1 - p_e)


def cohen_kappa(a: RatingSet, b: RatingSet, dimension: AnalogyDimension) -> float:
    ra = a.for_dimension(dimension)
    rb = b.for_dimension(dimension)
    if set(ra) != set(rb):
        only = sorted(set(ra) ^ set(rb))
        raise ItemMismatch(
            f"raters {a.rater_id!r} and {b.rater_id!r} rated different {dimension.value} items: {only[:5]}"
        )
    if not ra:
        raise EmptyItems(f"no {dimension.value} items rated")
    items = sorted(ra)
    return kappa_from_labels([ra[i] for i in items], [rb[i] for i in items])


@dataclass
class IAATable:
    dimensions: tuple[AnalogyDimension, ...]
    rows: list[tuple[str, str, list[float]]]


def iaa_report(ratings: Sequence[RatingSet], dimensions: Sequence[AnalogyDimension] = DIMENSIONS) -> IAATable:
    """Kappa for every rater pair and dimension (rows ``r1 VS r2``)."""
    if len(ratings) < 2:
        raise EmptyItems("need at least two raters")
    dims = tuple(dimensions)
    ordered = sorted(ratings, key=lambda r: r.rater_id)
    rows = []
    for ra, rb in itertools.combinations(ordered, 2):
        rows.append((ra.rater_id, rb.rater_id, [cohen_kappa(ra, rb, d) for d in dims]))
    return IAATable(dims, rows)


# ---------------------------------------------------------------------------
# correlation

def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise LengthMismatch("sequences differ in length")
    if len(x) < 2:
        raise LengthMismatch("need at least two observations")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant sequence")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass
class CorrelationMatrix:
    dims: tuple[AnalogyDimension, ...]
    values: np.ndarray  # nan marks an undefined cell

    def defined(self, i: int, j: int) -> bool:
        return not math.isnan(self.values[i, j])

    def max_off_diagonal(self) -> float:
        n = len(self.dims)
        cells = [self.values[i, j] for i in range(n) for j in range(n)
                 if i != j and self.defined(i, j)]
        return max(cells) if cells else math.nan


def label_columns(annotations: Sequence[PairAnnotation],
                  dims: Sequence[AnalogyDimension] = DIMENSIONS) -> dict[AnalogyDimension, list[float]]:
    return {d: [1.0 if a.labels.get(d) else 0.0 for a in annotations] for d in dims}


def correlation_matrix(annotations: Sequence[PairAnnotation],
                       dims: Sequence[AnalogyDimension] = DIMENSIONS) -> CorrelationMatrix:
    if len(annotations) < 2:
        raise TooFewAnnotations("need at least two annotated pairs")
    dims = tuple(dims)
    cols = label_columns(annotations, dims)
    n = len(dims)
    values = np.full((n, n), math.nan)
    for i in range(n):
        for j in range(i, n):
            try:
                r = pearson(cols[dims[i]], cols[dims[j]])
            except ZeroVariance:
                continue
            values[i, j] = values[j, i] = r
    return CorrelationMatrix(dims, values)
