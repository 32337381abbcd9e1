"""Candidate analogical pairs by lexical, semantic, frame, shape and random sampling."""

from __future__ import annotations

import enum
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import DIMENSIONS, AnalogyDimension, PairAnnotation, _iter_jsonl
from .errors import MalformedRecord, NoAnnotatedPairs, TooFewStories
from .frames import scaled_frame_distance
from .resources import Resources
from .seeding import rng_for
from .shapes import ArcProfile, shape_agreement
from .textsim import cosine

log = logging.getLogger(__name__)


class PairingMethod(str, enum.Enum):
    LEXICAL = "LEXICAL"
    SEMANTIC = "SEMANTIC"
    FRAME = "FRAME"
    SHAPE = "SHAPE"
    RANDOM = "RANDOM"

    @classmethod
    def parse(cls, name: str) -> "PairingMethod":
        key = name.strip().upper()
        if key == "FRAMES":
            key = "FRAME"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown pairing method {name!r}") from None


@dataclass(frozen=True)
class StoryPair:
    story_a: str
    story_b: str
    method: PairingMethod
    score: float | None = None

    @property
    def key(self) -> frozenset[str]:
        return frozenset((self.story_a, self.story_b))


@dataclass
class PairSet:
    pairs: list[StoryPair] = field(default_factory=list)
    seed: int = 0
    dedup_policy: bool = False

    def __len__(self) -> int:
        return len(self.pairs)

    def by_method(self) -> dict[PairingMethod, list[StoryPair]]:
        out: dict[PairingMethod, list[StoryPair]] = defaultdict(list)
        for p in self.pairs:
            out[p.method].append(p)
        return dict(out)


# ---------------------------------------------------------------------------
# nearest neighbours

def _level_mismatch(a: ArcProfile, b: ArcProfile) -> int:
    return sum(x != y for x, y in zip(a.levels, b.levels))


def candidate_scores(query: str, res: Resources, method: PairingMethod) -> list[tuple[str, float]]:
    """Score every other story against ``query``.

    Higher is better for LEXICAL and SEMANTIC (cosine); lower is better for
    FRAME (scaled distance, query as reference) and SHAPE (number of
    differing segment levels).
    """
    res.story(query)
    others = [sid for sid in res.order if sid != query]
    if method is PairingMethod.LEXICAL or method is PairingMethod.SEMANTIC:
        table = "lexical" if method is PairingMethod.LEXICAL else "semantic"
        q = res.require(table, query)
        return [(sid, cosine(q, res.require(table, sid))) for sid in others]
    if method is PairingMethod.FRAME:
        q = res.require("frames", query)
        cands = [(sid, res.require("frames", sid)) for sid in others]
        if not q.frames:
            # nothing to filter against: every candidate is maximally distant
            log.warning("story %s has no frames; FRAME partner falls back to the tie rule", query)
            return [(sid, 1.0) for sid, _ in cands]
        return [(sid, scaled_frame_distance(q, fs)) for sid, fs in cands]
    if method is PairingMethod.SHAPE:
        q = res.require("profiles", query)
        return [(sid, float(_level_mismatch(q, res.require("profiles", sid)))) for sid in others]
    raise ValueError(f"{method.value} has no similarity ordering")


def _ranked(scored: list[tuple[str, float]], method: PairingMethod) -> list[tuple[str, float]]:
    sign = -1.0 if method in (PairingMethod.LEXICAL, PairingMethod.SEMANTIC) else 1.0
    return sorted(scored, key=lambda kv: (sign * kv[1], kv[0]))


def nearest_by_method(query: str, res: Resources, method: PairingMethod, k: int = 1) -> StoryPair | list[StoryPair]:
    """Best partner for ``query``; ties go to the smallest candidate id.

    With ``k > 1`` a list of the ``k`` best pairs is returned instead.
    """
    if len(res.order) < 2:
        raise TooFewStories("need at least two stories to pair")
    ranked = _ranked(candidate_scores(query, res, method), method)
    keep_score = method is not PairingMethod.SHAPE
    pairs = [StoryPair(query, sid, method, score if keep_score else None) for sid, score in ranked[:k]]
    return pairs[0] if k == 1 else pairs


def random_partners(query: str, order: Sequence[str], seed: int, k: int = 1) -> list[str]:
    others = [sid for sid in order if sid != query]
    rng = rng_for(seed, "random-pair", query)
    idx = rng.choice(len(others), size=min(k, len(others)), replace=False)
    return [others[i] for i in idx]


def generate_pairs(res: Resources, methods: Iterable[PairingMethod], seed: int = 0, *, k: int = 1,
                   random_per_story: int | None = None) -> PairSet:
    """Nearest-neighbour pairs for every story and method, plus random pairs.

    By default RANDOM draws as many distinct partners per story as the other
    methods produce together (``k`` times the number of similarity methods,
    at least ``k``), so random and similarity pairs come in equal numbers.
    ``random_per_story`` overrides that count; it is capped at N - 1.
    """
    if len(res.order) < 2:
        raise TooFewStories("need at least two stories to pair")
    methods = list(methods)
    if random_per_story is None:
        random_per_story = k * max(1, sum(m is not PairingMethod.RANDOM for m in methods))
    pairs: list[StoryPair] = []
    for method in methods:
        for query in res.order:
            if method is PairingMethod.RANDOM:
                partners = random_partners(query, res.order, seed, random_per_story)
                pairs.extend(StoryPair(query, sid, method) for sid in partners)
            elif k == 1:
                pairs.append(nearest_by_method(query, res, method))
            else:
                pairs.extend(nearest_by_method(query, res, method, k))
    return PairSet(pairs, seed, False)


def dedup(pairs: PairSet) -> PairSet:
    seen: set[tuple[PairingMethod, frozenset[str]]] = set()
    kept = []
    for p in pairs.pairs:
        marker = (p.method, p.key)
        if marker in seen:
            continue
        seen.add(marker)
        kept.append(p)
    return PairSet(kept, pairs.seed, True)


# ---------------------------------------------------------------------------
# pair files

def write_pairs(pairs: PairSet, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in pairs.pairs:
            fh.write(json.dumps({
                "story_a": p.story_a,
                "story_b": p.story_b,
                "method": p.method.value,
                "score": p.score,
                "seed": pairs.seed,
            }))
            fh.write("\n")


def read_pairs(path: str | Path) -> PairSet:
    pairs = []
    seed = 0
    for lineno, rec in _iter_jsonl(path):
        try:
            score = rec.get("score")
            pairs.append(StoryPair(str(rec["story_a"]), str(rec["story_b"]),
                                   PairingMethod.parse(str(rec["method"])),
                                   None if score is None else float(score)))
            seed = int(rec.get("seed") or 0)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedRecord(f"bad pair record: {exc}", str(path), lineno) from None
    return PairSet(pairs, seed, False)


# ---------------------------------------------------------------------------
# scoring against annotations

@dataclass
class MethodScore:
    method: PairingMethod
    count: int
    average: float | None
    rates: dict[AnalogyDimension, float | None]
    shape_agreement: float | None = None


@dataclass
class MethodReport:
    dimensions: tuple[AnalogyDimension, ...]
    total_annotated: int
    scores: list[MethodScore]
    unmatched: list[str] = field(default_factory=list)

    def score_for(self, method: PairingMethod) -> MethodScore:
        for s in self.scores:
            if s.method is method:
                return s
        raise KeyError(method)


def score_methods(
    pairs: PairSet,
    annotations: Sequence[PairAnnotation],
    *,
    profiles: dict[str, ArcProfile] | None = None,
    dimensions: Sequence[AnalogyDimension] = DIMENSIONS,
) -> MethodReport:
    """Per-method analogy rates over the annotated pairs each method produced.

    An annotated pair counts for every method that generated the same
    unordered story pair. The method average is the mean number of positive
    dimensions per annotated pair.
    """
    dims = tuple(dimensions)
    keys_by_method: dict[PairingMethod, set[frozenset[str]]] = defaultdict(set)
    method_order: list[PairingMethod] = []
    for p in pairs.pairs:
        if p.method not in keys_by_method:
            method_order.append(p.method)
        keys_by_method[p.method].add(p.key)

    generated = set().union(*keys_by_method.values()) if keys_by_method else set()
    unmatched = [a.pair_id for a in annotations if a.key not in generated]
    if len(unmatched) == len(annotations):
        raise NoAnnotatedPairs("no annotated pair matches a generated pair")
    if unmatched:
        log.warning("%d annotated pairs match no generated pair", len(unmatched))

    scores = []
    for method in method_order:
        mine = [a for a in annotations if a.key in keys_by_method[method]]
        n = len(mine)
        if n == 0:
            scores.append(MethodScore(method, 0, None, {d: None for d in dims}))
            continue
        rates = {d: sum(bool(a.labels.get(d)) for a in mine) / n for d in dims}
        average = sum(a.positives(dims) for a in mine) / n
        sss = None
        if profiles is not None:
            shaped = [a for a in mine if a.story_a in profiles and a.story_b in profiles]
            if shaped:
                sss = sum(shape_agreement(profiles[a.story_a], profiles[a.story_b]) for a in shaped) / len(shaped)
        scores.append(MethodScore(method, n, average, rates, sss))
    return MethodReport(dims, len(annotations), scores, unmatched)
