"""Hedonometric story arcs.

A story's words are scored against a happiness lexicon, a sliding window
averages the scores, and the windowed series is cut into beginning (30%),
middle (40%) and end (30%). Each segment mean is graded HIGH / MID / LOW
against a neutral level and band, and the graded triple names the arc.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import HedonometerLexicon
from .errors import EmptySeries, NoScoredTokens, ParameterMismatch
from .textsim import tokenize

DEFAULT_WINDOW = 30
DEFAULT_NEUTRAL = 5.4
DEFAULT_BAND = 0.2
BEGIN_FRACTION = 0.3
END_FRACTION = 0.7


class SegmentLevel(str, enum.Enum):
    HIGH = "HIGH"
    MID = "MID"
    LOW = "LOW"

    @property
    def short(self) -> str:
        return self.value[0]


Levels = tuple[SegmentLevel, SegmentLevel, SegmentLevel]

H, M, L = SegmentLevel.HIGH, SegmentLevel.MID, SegmentLevel.LOW


class ArcName(str, enum.Enum):
    TRAGEDY = "TRAGEDY"
    RAGS_TO_RICHES = "RAGS_TO_RICHES"
    CINDERELLA = "CINDERELLA"
    OEDIPUS = "OEDIPUS"
    OTHER = "OTHER"


ARC_TABLE: dict[Levels, ArcName] = {
    (H, H, L): ArcName.TRAGEDY,
    (L, M, H): ArcName.RAGS_TO_RICHES,
    (H, L, H): ArcName.CINDERELLA,
    (L, M, L): ArcName.OEDIPUS,
}


@dataclass(frozen=True)
class ArcType:
    name: ArcName
    levels: Levels

    def __str__(self) -> str:
        if self.name is ArcName.OTHER:
            return "OTHER(" + ",".join(lv.short for lv in self.levels) + ")"
        return self.name.value


@dataclass(frozen=True)
class HedonicSeries:
    story_id: str
    values: tuple[float, ...]
    window: int
    scored_tokens: int = 0
    total_tokens: int = 0

    @property
    def coverage(self) -> float:
        return self.scored_tokens / self.total_tokens if self.total_tokens else 0.0


@dataclass(frozen=True)
class ArcProfile:
    story_id: str
    begin_avg: float
    mid_avg: float
    end_avg: float
    levels: Levels
    arc: ArcType
    window: int = DEFAULT_WINDOW
    neutral: float = DEFAULT_NEUTRAL
    band: float = DEFAULT_BAND
    coverage: float = 0.0

    @property
    def params(self) -> tuple[int, float, float]:
        return (self.window, self.neutral, self.band)


def windowed_means(scores: Sequence[float], window: int) -> np.ndarray:
    """Stride-1 moving average; a single overall mean if too short."""
    if window < 1:
        raise ValueError("window must be >= 1")
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise NoScoredTokens("no scored tokens")
    if arr.size < window:
        return np.array([arr.mean()])
    # direct sums per window keep values exact for constant input
    view = np.lib.stride_tricks.sliding_window_view(arr, window)
    return view.sum(axis=1) / window


def hedonic_series(text: str, lexicon: HedonometerLexicon, window: int = DEFAULT_WINDOW,
                   story_id: str = "") -> HedonicSeries:
    tokens = tokenize(text)
    scores = [lexicon[t] for t in tokens if t in lexicon]
    if not scores:
        raise NoScoredTokens(f"story {story_id!r}: no token is in the lexicon")
    values = windowed_means(scores, window)
    return HedonicSeries(story_id, tuple(float(v) for v in values), window, len(scores), len(tokens))


def segment_bounds(n: int) -> tuple[slice, slice, slice]:
    """Index ranges for beginning / middle / end of an ``n``-point series.

    Cuts sit at floor(0.3 n) and floor(0.7 n), nudged so that each segment
    holds at least one point. Series shorter than three points cannot be
    split disjointly; there the first point, the whole series and the last
    point serve as the three segments.
    """
    if n <= 0:
        raise EmptySeries("cannot segment an empty series")
    if n < 3:
        return slice(0, 1), slice(0, n), slice(n - 1, n)
    i1 = min(max(1, math.floor(BEGIN_FRACTION * n)), n - 2)
    i2 = min(max(i1 + 1, math.floor(END_FRACTION * n)), n - 1)
    return slice(0, i1), slice(i1, i2), slice(i2, n)


def level_of(mean: float, neutral: float = DEFAULT_NEUTRAL, band: float = DEFAULT_BAND) -> SegmentLevel:
    # strict at both edges: exactly neutral +/- band grades MID
    if mean > neutral + band:
        return SegmentLevel.HIGH
    if mean < neutral - band:
        return SegmentLevel.LOW
    return SegmentLevel.MID


def segment_levels(series: HedonicSeries | Sequence[float], neutral: float = DEFAULT_NEUTRAL,
                   band: float = DEFAULT_BAND) -> tuple[float, float, float, Levels]:
    if band <= 0:
        raise ValueError("band must be positive")
    values = np.asarray(series.values if isinstance(series, HedonicSeries) else series, dtype=np.float64)
    if values.size == 0:
        raise EmptySeries("cannot segment an empty series")
    means = tuple(float(values[s].mean()) for s in segment_bounds(values.size))
    levels = tuple(level_of(m, neutral, band) for m in means)
    return means[0], means[1], means[2], levels  # type: ignore[return-value]


def classify_arc(levels: Sequence[SegmentLevel]) -> ArcType:
    key = tuple(SegmentLevel(lv) for lv in levels)
    if len(key) != 3:
        raise ValueError("an arc needs exactly three segment levels")
    return ArcType(ARC_TABLE.get(key, ArcName.OTHER), key)  # type: ignore[arg-type]


def arc_profile(text: str, lexicon: HedonometerLexicon, story_id: str = "", *,
                window: int = DEFAULT_WINDOW, neutral: float = DEFAULT_NEUTRAL,
                band: float = DEFAULT_BAND) -> tuple[ArcProfile, HedonicSeries]:
    series = hedonic_series(text, lexicon, window, story_id)
    begin, mid, end, levels = segment_levels(series, neutral, band)
    profile = ArcProfile(story_id, begin, mid, end, levels, classify_arc(levels),
                         window, neutral, band, series.coverage)
    return profile, series


def shape_agreement(a: ArcProfile, b: ArcProfile) -> bool:
    if a.params != b.params:
        raise ParameterMismatch(f"profiles built with different parameters: {a.params} vs {b.params}")
    return a.levels == b.levels
