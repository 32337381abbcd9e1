"""Data model and file ingestion for fables, moral tags and pair annotations.

All files are UTF-8, one JSON object per line unless noted:

* corpus      ``{"id", "title", "text", "moral", "tags"}``
* annotations ``{"pair_id", "story_a", "story_b", "labels", "evidence"}``
* lexicon     tab-separated ``word<TAB>score``, optional header
* ratings     comma-separated ``rater_id,pair_id,dimension,label``, optional header
"""

from __future__ import annotations

import csv
import enum
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    ConstraintViolation,
    DuplicateId,
    MalformedRecord,
    MissingDimension,
    NegatedTriple,
    UnknownStoryId,
    UnknownTag,
)


class MoralTag(str, enum.Enum):
    CONSEQUENCE = "CONSEQUENCE"
    CONTENT = "CONTENT"
    DANGER = "DANGER"
    EFFORT = "EFFORT"
    FLATTERY = "FLATTERY"
    FRIENDS = "FRIENDS"
    GREED = "GREED"
    LAZY = "LAZY"
    LEARN = "LEARN"
    OPPORTUNITY = "OPPORTUNITY"
    RESPECT = "RESPECT"
    TRUE_NATURE = "TRUE-NATURE"
    TRUST = "TRUST"
    WEAK = "WEAK"
    WORTHINESS = "WORTHINESS"

    @classmethod
    def parse(cls, name: str) -> "MoralTag":
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise UnknownTag(f"unknown moral tag {name!r}") from None


class AnalogyDimension(str, enum.Enum):
    """Six analogy dimensions plus literal similarity, in report order."""

    SAA = "SAA"  # shallow attribute
    DAA = "DAA"  # deep attribute
    RA = "RA"  # relational
    EA = "EA"  # event
    SA = "SA"  # structural
    MP = "MP"  # moral / purpose
    LS = "LS"  # literal similarity

    @classmethod
    def parse(cls, name: str) -> "AnalogyDimension":
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise MalformedRecord(f"unknown analogy dimension {name!r}") from None


DIMENSIONS: tuple[AnalogyDimension, ...] = tuple(AnalogyDimension)
NEGATION_WORDS = frozenset({"not", "no"})
TRIPLE_DELIMITER = " - "


@dataclass(frozen=True)
class Story:
    id: str
    title: str
    text: str
    moral: str | None = None
    tags: frozenset[MoralTag] = frozenset()

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise MalformedRecord(f"story {self.id!r} has empty text")


@dataclass(frozen=True)
class EvidenceTriple:
    subject: str
    predicate: str
    object: str = ""

    @classmethod
    def parse(cls, raw: str) -> "EvidenceTriple":
        # bare "-" would split hyphenated words; only " - " delimits
        parts = [p.strip() for p in raw.strip().rstrip("-").split(TRIPLE_DELIMITER)]
        if any(not p for p in parts[:2]):
            raise MalformedRecord(f"evidence triple {raw!r} has an empty subject or predicate")
        if len(parts) < 2:
            raise MalformedRecord(f"evidence triple {raw!r} lacks a ' - ' delimiter")
        if len(parts) == 2:
            return cls(parts[0], parts[1], "")
        return cls(parts[0], TRIPLE_DELIMITER.join(parts[1:-1]), parts[-1])

    @property
    def negated(self) -> bool:
        words = self.predicate.lower().split()
        return bool(words) and words[0] in NEGATION_WORDS

    def __str__(self) -> str:
        if self.object:
            return TRIPLE_DELIMITER.join((self.subject, self.predicate, self.object))
        return TRIPLE_DELIMITER.join((self.subject, self.predicate))


EvidencePair = tuple[EvidenceTriple, EvidenceTriple]


@dataclass(frozen=True)
class PairAnnotation:
    pair_id: str
    story_a: str
    story_b: str
    labels: Mapping[AnalogyDimension, bool]
    evidence: Mapping[AnalogyDimension, tuple[EvidencePair, ...]] = field(default_factory=dict)

    def positives(self, dims: Iterable[AnalogyDimension] = DIMENSIONS) -> int:
        return sum(bool(self.labels.get(d, False)) for d in dims)

    @property
    def key(self) -> frozenset[str]:
        return frozenset((self.story_a, self.story_b))


@dataclass(frozen=True)
class Violation:
    pair_id: str
    dimension: AnalogyDimension | None
    rule: str
    message: str

    def as_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "dimension": self.dimension.value if self.dimension else None,
            "rule": self.rule,
            "message": self.message,
        }


class HedonometerLexicon(Mapping[str, float]):
    """Case-insensitive word -> happiness score table."""

    def __init__(self, entries: Mapping[str, float]):
        table: dict[str, float] = {}
        for word, score in entries.items():
            score = float(score)
            if not math.isfinite(score):
                raise MalformedRecord(f"non-finite score for {word!r}")
            table.setdefault(word.lower(), score)
        self._entries = table

    def __getitem__(self, word: str) -> float:
        return self._entries[word.lower()]

    def __contains__(self, word: object) -> bool:
        return isinstance(word, str) and word.lower() in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def shifted(self, delta: float) -> "HedonometerLexicon":
        return HedonometerLexicon({w: s + delta for w, s in self._entries.items()})


@dataclass(frozen=True)
class RatingSet:
    rater_id: str
    items: tuple[tuple[str, AnalogyDimension, bool], ...]

    def __post_init__(self):
        seen = Counter((p, d) for p, d, _ in self.items)
        dup = [k for k, n in seen.items() if n > 1]
        if dup:
            p, d = dup[0]
            raise DuplicateId(f"rater {self.rater_id!r} rated ({p}, {d.value}) twice")

    def for_dimension(self, dim: AnalogyDimension) -> dict[str, bool]:
        return {p: v for p, d, v in self.items if d is dim}


# ---------------------------------------------------------------------------
# line-delimited helpers

def _iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON ({exc.msg})", str(path), lineno) from None
            if not isinstance(record, dict):
                raise MalformedRecord("record is not an object", str(path), lineno)
            yield lineno, record


def _write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=False))
            fh.write("\n")


def _require_str(record: dict, key: str, path, lineno, *, nullable=False) -> str | None:
    value = record.get(key)
    if value is None and nullable:
        return None
    if not isinstance(value, str):
        raise MalformedRecord(f"field {key!r} must be a string", str(path), lineno)
    return value


def parse_bool(raw: object) -> bool:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)) and raw in (0, 1):
        return bool(raw)
    if isinstance(raw, str):
        s = raw.strip().lower()
        if s in {"true", "1", "yes", "y", "t"}:
            return True
        if s in {"false", "0", "no", "n", "f"}:
            return False
    raise ValueError(f"not a boolean: {raw!r}")


# ---------------------------------------------------------------------------
# corpus

def story_from_record(record: dict, path=None, lineno=None) -> Story:
    sid = _require_str(record, "id", path, lineno)
    text = _require_str(record, "text", path, lineno)
    if not text.strip():
        raise MalformedRecord(f"story {sid!r} has empty text", str(path), lineno)
    title = record.get("title") or ""
    moral = _require_str(record, "moral", path, lineno, nullable=True)
    raw_tags = record.get("tags") or []
    if not isinstance(raw_tags, list):
        raise MalformedRecord("field 'tags' must be an array", str(path), lineno)
    tags = set()
    for t in raw_tags:
        try:
            tags.add(MoralTag.parse(str(t)))
        except UnknownTag as exc:
            raise UnknownTag(str(exc), str(path) if path else None, lineno) from None
    return Story(sid, str(title), text, moral or None, frozenset(tags))


def story_to_record(story: Story) -> dict:
    return {
        "id": story.id,
        "title": story.title,
        "text": story.text,
        "moral": story.moral,
        "tags": sorted(t.value for t in story.tags),
    }


def load_corpus(path: str | Path) -> list[Story]:
    """Read a corpus file; ids must be unique and tags from the closed set."""
    stories: list[Story] = []
    seen: dict[str, int] = {}
    for lineno, record in _iter_jsonl(path):
        story = story_from_record(record, path, lineno)
        if story.id in seen:
            raise DuplicateId(
                f"story id {story.id!r} already defined on line {seen[story.id]}", str(path), lineno
            )
        seen[story.id] = lineno
        stories.append(story)
    return stories


def dump_corpus(stories: Iterable[Story], path: str | Path) -> None:
    _write_jsonl((story_to_record(s) for s in stories), path)


def moral_distribution(corpus: Iterable[Story]) -> dict[MoralTag, int]:
    counts = {tag: 0 for tag in MoralTag}
    for story in corpus:
        for tag in story.tags:
            counts[tag] += 1
    return counts


# ---------------------------------------------------------------------------
# annotations

def annotation_violations(ann: PairAnnotation) -> list[Violation]:
    out: list[Violation] = []
    if ann.story_a == ann.story_b:
        out.append(Violation(ann.pair_id, None, "distinct-stories",
                             f"pair pairs story {ann.story_a!r} with itself"))
    labels = ann.labels
    if labels.get(AnalogyDimension.SA) and not labels.get(AnalogyDimension.EA):
        out.append(Violation(ann.pair_id, AnalogyDimension.SA, "sa-requires-ea",
                             "SA is true but EA is false; event analogy is required for structural analogy"))
    for dim in DIMENSIONS:
        entries = ann.evidence.get(dim, ())
        if entries and not labels.get(dim, False):
            out.append(Violation(ann.pair_id, dim, "evidence-on-negative",
                                 f"{dim.value} is false but carries {len(entries)} evidence entries"))
        for left, right in entries:
            for triple in (left, right):
                if triple.negated:
                    out.append(Violation(ann.pair_id, dim, "negated-triple",
                                         f"negated evidence triple {str(triple)!r}"))
    return out


_RULE_ERRORS = {"negated-triple": NegatedTriple}


def annotation_from_record(record: dict, path=None, lineno=None) -> PairAnnotation:
    where = (str(path) if path else None, lineno)
    pair_id = _require_str(record, "pair_id", path, lineno)
    a = _require_str(record, "story_a", path, lineno)
    b = _require_str(record, "story_b", path, lineno)
    raw_labels = record.get("labels")
    if not isinstance(raw_labels, dict):
        raise MalformedRecord("field 'labels' must be an object", *where)
    labels: dict[AnalogyDimension, bool] = {}
    for name, value in raw_labels.items():
        dim = AnalogyDimension.parse(name)
        try:
            labels[dim] = parse_bool(value)
        except ValueError as exc:
            raise MalformedRecord(f"label {name}: {exc}", *where) from None
    missing = [d.value for d in DIMENSIONS if d not in labels]
    if missing:
        raise MissingDimension(f"pair {pair_id!r} lacks labels for {', '.join(missing)}", *where)

    raw_evidence = record.get("evidence") or {}
    if not isinstance(raw_evidence, dict):
        raise MalformedRecord("field 'evidence' must be an object", *where)
    evidence: dict[AnalogyDimension, tuple[EvidencePair, ...]] = {}
    for name, entries in raw_evidence.items():
        dim = AnalogyDimension.parse(name)
        if not isinstance(entries, list):
            raise MalformedRecord(f"evidence for {name} must be an array", *where)
        pairs = []
        for entry in entries:
            if not (isinstance(entry, list) and len(entry) == 2 and all(isinstance(t, str) for t in entry)):
                raise MalformedRecord(f"evidence entry for {name} must be two triple strings", *where)
            try:
                pairs.append((EvidenceTriple.parse(entry[0]), EvidenceTriple.parse(entry[1])))
            except MalformedRecord as exc:
                raise MalformedRecord(str(exc), *where) from None
        if pairs:
            evidence[dim] = tuple(pairs)
    return PairAnnotation(pair_id, a, b, labels, evidence)


def annotation_to_record(ann: PairAnnotation) -> dict:
    return {
        "pair_id": ann.pair_id,
        "story_a": ann.story_a,
        "story_b": ann.story_b,
        "labels": {d.value: bool(ann.labels[d]) for d in DIMENSIONS if d in ann.labels},
        "evidence": {
            d.value: [[str(l), str(r)] for l, r in ann.evidence[d]]
            for d in DIMENSIONS if ann.evidence.get(d)
        },
    }


def load_annotations(path: str | Path, corpus: Iterable[Story], *, lenient: bool = False) -> list[PairAnnotation]:
    """Read pair annotations and check them against the corpus.

    Unknown story ids, missing dimensions and malformed records always
    raise. Constraint violations (SA without EA, negated triples, evidence
    on negative labels, self-pairs) raise in the default strict mode; with
    ``lenient=True`` they are kept so :func:`validate_annotations` can
    report them.
    """
    ids = {s.id for s in corpus}
    out: list[PairAnnotation] = []
    seen: dict[str, int] = {}
    for lineno, record in _iter_jsonl(path):
        ann = annotation_from_record(record, path, lineno)
        if ann.pair_id in seen:
            raise DuplicateId(f"pair id {ann.pair_id!r} already defined on line {seen[ann.pair_id]}",
                              str(path), lineno)
        seen[ann.pair_id] = lineno
        for sid in (ann.story_a, ann.story_b):
            if sid not in ids:
                raise UnknownStoryId(f"pair {ann.pair_id!r} references unknown story {sid!r}",
                                     str(path), lineno)
        if not lenient:
            violations = annotation_violations(ann)
            if violations:
                v = violations[0]
                err = _RULE_ERRORS.get(v.rule, ConstraintViolation)
                raise err(f"pair {ann.pair_id!r}: {v.message} [{v.rule}]", str(path), lineno)
        out.append(ann)
    return out


def dump_annotations(annotations: Iterable[PairAnnotation], path: str | Path) -> None:
    _write_jsonl((annotation_to_record(a) for a in annotations), path)


def validate_annotations(annotations: Iterable[PairAnnotation]) -> list[Violation]:
    reports: list[Violation] = []
    for ann in annotations:
        reports.extend(annotation_violations(ann))
    return reports


# ---------------------------------------------------------------------------
# lexicon and ratings

def load_lexicon(path: str | Path) -> HedonometerLexicon:
    entries: dict[str, float] = {}
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n\r")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise MalformedRecord("expected 'word<TAB>score'", str(path), lineno)
            try:
                score = float(cols[1])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise MalformedRecord(f"bad score {cols[1]!r}", str(path), lineno) from None
            if not math.isfinite(score):
                raise MalformedRecord(f"non-finite score {cols[1]!r}", str(path), lineno)
            entries.setdefault(cols[0].strip().lower(), score)
    return HedonometerLexicon(entries)


def load_ratings(path: str | Path) -> list[RatingSet]:
    path = Path(path)
    per_rater: dict[str, list[tuple[str, AnalogyDimension, bool]]] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 4:
                raise MalformedRecord("expected rater_id,pair_id,dimension,label", str(path), lineno)
            rater, pair_id, dim_name, raw = (c.strip() for c in row)
            try:
                dim = AnalogyDimension.parse(dim_name)
                value = parse_bool(raw)
            except (MalformedRecord, ValueError) as exc:
                if lineno == 1:
                    continue  # header
                raise MalformedRecord(str(exc), str(path), lineno) from None
            per_rater.setdefault(rater, []).append((pair_id, dim, value))
    return [RatingSet(r, tuple(items)) for r, items in per_rater.items()]
