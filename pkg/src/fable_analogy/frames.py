"""Semantic frame sequences: ingestion, edit distance and count features."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from .corpus import MoralTag, Story, _iter_jsonl, _write_jsonl
from .errors import DuplicateId, EmptyReference, EmptyTag, MalformedRecord


@dataclass(frozen=True)
class FrameSeq:
    story_id: str
    frames: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class FrameFeatureVector:
    story_id: str
    counts: Mapping[str, int] = field(default_factory=dict)
    bigram_counts: Mapping[tuple[str, str], int] = field(default_factory=dict)


def load_frames(path: str | Path) -> list[FrameSeq]:
    """Read ``{"id": ..., "frames": [...]}`` records, one per story."""
    out: list[FrameSeq] = []
    seen: dict[str, int] = {}
    for lineno, record in _iter_jsonl(path):
        sid = record.get("id")
        frames = record.get("frames")
        if not isinstance(sid, str) or not isinstance(frames, list):
            raise MalformedRecord("expected string 'id' and array 'frames'", str(path), lineno)
        if not all(isinstance(f, str) and f.strip() for f in frames):
            raise MalformedRecord("frame labels must be non-empty strings", str(path), lineno)
        if sid in seen:
            raise DuplicateId(f"frames for {sid!r} already given on line {seen[sid]}", str(path), lineno)
        seen[sid] = lineno
        out.append(FrameSeq(sid, tuple(f.strip() for f in frames)))
    return out


def dump_frames(seqs: Iterable[FrameSeq], path: str | Path) -> None:
    _write_jsonl(({"id": s.story_id, "frames": list(s.frames)} for s in seqs), path)


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Levenshtein distance over label sequences (unit costs).

    Each label is one symbol, so ``["Travel", "Collaboration"]`` vs
    ``["Travel"]`` is distance 1.
    """
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def filter_to_reference(reference: Sequence[str], other: Sequence[str]) -> tuple[str, ...]:
    keep = set(reference)
    return tuple(f for f in other if f in keep)


def scaled_frame_distance(a: FrameSeq | Sequence[str], b: FrameSeq | Sequence[str]) -> float:
    """Directional, length-normalised frame distance with ``a`` as reference.

    ``b`` is reduced to the labels that also occur in ``a`` (order kept), and
    the edit distance is divided by the longer of ``a`` and the reduced ``b``.
    """
    ref = a.frames if isinstance(a, FrameSeq) else tuple(a)
    other = b.frames if isinstance(b, FrameSeq) else tuple(b)
    if not ref:
        raise EmptyReference("reference frame sequence is empty")
    reduced = filter_to_reference(ref, other)
    return edit_distance(ref, reduced) / max(len(ref), len(reduced))


def frame_features(seq: FrameSeq, vocabulary: Iterable[str] | None = None) -> FrameFeatureVector:
    frames = seq.frames
    counts = Counter(frames)
    bigrams = Counter(zip(frames, frames[1:]))
    if vocabulary is not None:
        vocab = set(vocabulary)
        counts = Counter({f: n for f, n in counts.items() if f in vocab})
        bigrams = Counter({bg: n for bg, n in bigrams.items() if bg[0] in vocab and bg[1] in vocab})
    return FrameFeatureVector(seq.story_id, dict(counts), dict(bigrams))


def top_k_frames_per_tag(stories: Iterable[Story], frames: Mapping[str, FrameSeq], k: int,
                         tags: Iterable[MoralTag] | None = None) -> dict[MoralTag, list[str]]:
    """Most frequent ``k`` frame labels among the stories carrying each tag.

    Ties go to the lexicographically smaller label. Only tags that occur in
    the corpus are considered unless ``tags`` lists them explicitly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    per_tag: dict[MoralTag, Counter[str]] = {}
    framed: dict[MoralTag, int] = {}
    for story in stories:
        seq = frames.get(story.id)
        for tag in story.tags:
            per_tag.setdefault(tag, Counter())
            if seq is not None:
                per_tag[tag].update(seq.frames)
                framed[tag] = framed.get(tag, 0) + 1
    wanted = list(tags) if tags is not None else sorted(per_tag, key=lambda t: t.value)
    out: dict[MoralTag, list[str]] = {}
    for tag in wanted:
        if not framed.get(tag):
            raise EmptyTag(f"tag {tag.value} has no story with a frame sequence")
        ranked = sorted(per_tag[tag].items(), key=lambda kv: (-kv[1], kv[0]))
        out[tag] = [label for label, _ in ranked[:k]]
    return out


def feature_vocabulary(features: Iterable[FrameFeatureVector], *, bigrams: bool = True) -> list:
    """Stable column order for turning feature maps into matrix rows."""
    unigram_keys: set[str] = set()
    bigram_keys: set[tuple[str, str]] = set()
    for fv in features:
        unigram_keys.update(fv.counts)
        if bigrams:
            bigram_keys.update(fv.bigram_counts)
    return sorted(unigram_keys) + sorted(bigram_keys)


def feature_row(fv: FrameFeatureVector, columns: Sequence) -> list[float]:
    return [float(fv.bigram_counts.get(c, 0) if isinstance(c, tuple) else fv.counts.get(c, 0))
            for c in columns]
