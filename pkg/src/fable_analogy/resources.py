"""Per-story derived data shared by pairing and the pair classifiers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .corpus import HedonometerLexicon, Story
from .errors import MissingResource, NoKnownTokens, NoScoredTokens, UnknownStory
from .frames import FrameSeq
from .shapes import DEFAULT_BAND, DEFAULT_NEUTRAL, DEFAULT_WINDOW, ArcProfile, HedonicSeries, arc_profile
from .textsim import (
    EmbeddingProvider,
    TfIdfModel,
    embed_document_weighted,
    fit_tfidf,
    remove_stopwords,
    tokenize,
)

log = logging.getLogger(__name__)


@dataclass
class Resources:
    """Everything the similarity methods need, keyed by story id.

    Vectors are computed once at build time. A story absent from a map
    simply lacks that resource; methods that need it raise
    :class:`MissingResource`.
    """

    stories: dict[str, Story]
    order: list[str]
    tokens: dict[str, list[str]]
    tfidf: TfIdfModel
    lexical: dict[str, np.ndarray] = field(default_factory=dict)
    semantic: dict[str, np.ndarray] = field(default_factory=dict)
    moral: dict[str, np.ndarray] = field(default_factory=dict)
    frames: dict[str, FrameSeq] = field(default_factory=dict)
    profiles: dict[str, ArcProfile] = field(default_factory=dict)
    series: dict[str, HedonicSeries] = field(default_factory=dict)
    skipped_shapes: list[str] = field(default_factory=list)

    def story(self, sid: str) -> Story:
        try:
            return self.stories[sid]
        except KeyError:
            raise UnknownStory(sid) from None

    def require(self, table: str, sid: str):
        values = getattr(self, table)
        if sid not in values:
            self.story(sid)
            raise MissingResource(f"story {sid!r} has no {table} resource")
        return values[sid]


def build_resources(
    stories: Iterable[Story],
    *,
    words: EmbeddingProvider | None = None,
    docs: EmbeddingProvider | None = None,
    frames: Mapping[str, FrameSeq] | Iterable[FrameSeq] | None = None,
    lexicon: HedonometerLexicon | None = None,
    stopwords: Iterable[str] | None = None,
    window: int = DEFAULT_WINDOW,
    neutral: float = DEFAULT_NEUTRAL,
    band: float = DEFAULT_BAND,
) -> Resources:
    stories = list(stories)
    stop = frozenset(stopwords) if stopwords is not None else None

    def toks(text: str) -> list[str]:
        t = tokenize(text)
        return remove_stopwords(t, stop) if stop is not None else t

    tokens = {s.id: toks(s.text) for s in stories}
    order = [s.id for s in stories]
    tfidf = fit_tfidf([tokens[sid] for sid in order]) if stories else TfIdfModel(0, {})
    res = Resources({s.id: s for s in stories}, order, tokens, tfidf)

    if words is not None:
        for sid in order:
            try:
                res.lexical[sid] = embed_document_weighted(tokens[sid], words, tfidf)
            except NoKnownTokens:
                log.warning("story %s: no token has a word vector", sid)
        moral_tokens = {s.id: toks(s.moral) for s in stories if s.moral}
        if moral_tokens:
            moral_tfidf = fit_tfidf(list(moral_tokens.values()))
            for sid, mt in moral_tokens.items():
                try:
                    res.moral[sid] = embed_document_weighted(mt, words, moral_tfidf)
                except NoKnownTokens:
                    log.warning("story %s: no moral token has a word vector", sid)
    if docs is not None:
        for sid in order:
            vec = docs.vector(sid)
            if vec is not None:
                res.semantic[sid] = np.asarray(vec, dtype=np.float64)
    if frames is not None:
        seqs = frames.values() if isinstance(frames, Mapping) else frames
        res.frames = {fs.story_id: fs for fs in seqs if fs.story_id in res.stories}
    if lexicon is not None:
        for s in stories:
            try:
                profile, series = arc_profile(s.text, lexicon, s.id, window=window, neutral=neutral, band=band)
            except NoScoredTokens:
                res.skipped_shapes.append(s.id)
                continue
            res.profiles[s.id] = profile
            res.series[s.id] = series
    return res
