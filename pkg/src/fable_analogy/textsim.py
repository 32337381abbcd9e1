"""Tokenization, TF-IDF weighting, embedding providers and cosine similarity."""

from __future__ import annotations

import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    MalformedRecord,
    NoKnownTokens,
    SyntheticEmbeddingWarning,
    WordNotInDoc,
    ZeroVector,
)
from .seeding import derive_seed

TOKEN_RE = re.compile(r"[^\W\d_]+(?:['\-][^\W\d_]+)*")

STOPWORDS = frozenset(
    """
    a an the and or but if of for to in on at from by with as into about over
    is are was were be been being am do does did have has had i you he she it
    we they them him her his its our your their my me us this that these those
    so than then there here not no nor only very can will would should could
    """.split()
)

TokenStream = list[str]


def tokenize(text: str) -> TokenStream:
    """Lowercase alphabetic tokens; internal apostrophes and hyphens survive.

    >>> tokenize("You must now e'en go")
    ['you', 'must', 'now', "e'en", 'go']
    """
    text = text.replace("’", "'").replace("‘", "'")
    return [m.group(0).lower() for m in TOKEN_RE.finditer(text)]


def remove_stopwords(tokens: Sequence[str], stoplist: Iterable[str] = STOPWORDS) -> TokenStream:
    stop = frozenset(stoplist)
    return [t for t in tokens if t not in stop]


def lexical_overlap(a: Sequence[str], b: Sequence[str]) -> float:
    """Jaccard similarity of the two token sets; 0.0 when both are empty."""
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


# ---------------------------------------------------------------------------
# TF-IDF

@dataclass(frozen=True)
class TfIdfModel:
    doc_count: int
    doc_freq: Mapping[str, int] = field(default_factory=dict)

    def idf(self, word: str) -> float:
        # smoothed: never below 1, defined for words unseen at fit time
        df = self.doc_freq.get(word, 0)
        return math.log((1 + self.doc_count) / (1 + df)) + 1.0


def fit_tfidf(docs: Sequence[Sequence[str]]) -> TfIdfModel:
    if not docs:
        raise EmptyCorpus("cannot fit TF-IDF on zero documents")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc))
    return TfIdfModel(len(docs), dict(df))


def tfidf_weight(model: TfIdfModel, doc: Sequence[str], word: str) -> float:
    count = sum(1 for t in doc if t == word)
    if count == 0:
        raise WordNotInDoc(word)
    return (count / len(doc)) * model.idf(word)


# ---------------------------------------------------------------------------
# embeddings

@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("embedding dimension must be positive")
        for key, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise DimensionMismatch(f"vector for {key!r} has shape {vec.shape}, expected ({self.dimension},)")
            if not np.all(np.isfinite(vec)):
                raise MalformedRecord(f"vector for {key!r} has non-finite components")

    def __contains__(self, key: object) -> bool:
        return key in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Read a word2vec-style text table (``key v1 v2 ...`` per line).

    An optional ``count dimension`` header line is recognised and checked.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    declared: tuple[int, int] | None = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                declared = (int(parts[0]), int(parts[1]))
                dim = declared[1]
                continue
            key, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                raise MalformedRecord("non-numeric vector component", str(path), lineno) from None
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or dim == 0:
                raise MalformedRecord(f"expected {dim} components, got {len(vec)}", str(path), lineno)
            if not np.all(np.isfinite(vec)):
                raise MalformedRecord("non-finite vector component", str(path), lineno)
            if key in vectors:
                raise MalformedRecord(f"duplicate key {key!r}", str(path), lineno)
            vectors[key] = vec
    if dim is None:
        raise MalformedRecord("empty embedding file", str(path))
    if declared is not None and declared[0] != len(vectors):
        raise MalformedRecord(f"header declares {declared[0]} vectors, file has {len(vectors)}", str(path))
    return EmbeddingTable(dim, vectors)


def hash_embedding(key: str, dimension: int, seed: int) -> np.ndarray:
    """Unit vector that depends only on ``(key, dimension, seed)``."""
    if dimension <= 0:
        raise ValueError("dimension must be positive")
    rng = np.random.default_rng(derive_seed(seed, "hash-embedding", dimension, key))
    vec = rng.standard_normal(dimension)
    return vec / np.linalg.norm(vec)


class EmbeddingProvider(Protocol):
    dimension: int
    synthetic: bool

    def vector(self, key: str) -> np.ndarray | None: ...


class TableProvider:
    def __init__(self, table: EmbeddingTable, *, fold_case: bool = True, name: str = "table"):
        self.table = table
        self.dimension = table.dimension
        self.synthetic = False
        self.fold_case = fold_case
        self.name = name

    def vector(self, key: str) -> np.ndarray | None:
        vec = self.table.vectors.get(key)
        if vec is None and self.fold_case:
            vec = self.table.vectors.get(key.lower())
        return vec

    def __repr__(self) -> str:
        return f"TableProvider({self.name}, dim={self.dimension}, n={len(self.table)})"


class HashProvider:
    """Deterministic stand-in when no vector table is supplied."""

    def __init__(self, dimension: int = 64, seed: int = 0):
        self.dimension = dimension
        self.seed = seed
        self.synthetic = True
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, key: str) -> np.ndarray:
        vec = self._cache.get(key)
        if vec is None:
            vec = self._cache[key] = hash_embedding(key, self.dimension, self.seed)
        return vec

    def __repr__(self) -> str:
        return f"hash:{self.dimension}:{self.seed}"


def parse_provider_spec(spec: str) -> tuple[str, EmbeddingProvider]:
    """Resolve a CLI provider spec.

    ``hash:<dim>:<seed>`` gives a :class:`HashProvider`; ``words:PATH`` and
    ``docs:PATH`` load a table for word or document vectors. A bare path is
    treated as a word table.
    """
    if spec.startswith("hash:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"hash provider spec must be hash:<dimension>:<seed>, got {spec!r}")
        return "hash", HashProvider(int(parts[1]), int(parts[2]))
    kind, _, rest = spec.partition(":")
    if kind in ("words", "docs") and rest:
        table = load_embedding_table(rest)
        return kind, TableProvider(table, fold_case=(kind == "words"), name=rest)
    return "words", TableProvider(load_embedding_table(spec), name=spec)


def warn_if_synthetic(provider: EmbeddingProvider, what: str) -> None:
    if getattr(provider, "synthetic", False):
        warnings.warn(
            f"{what} uses hash-fallback vectors; similarity values are synthetic",
            SyntheticEmbeddingWarning,
            stacklevel=2,
        )


def embed_document_weighted(doc: Sequence[str], words: EmbeddingProvider, model: TfIdfModel) -> np.ndarray:
    """TF-IDF weighted mean of the word vectors of ``doc``.

    Tokens without a vector are skipped rather than counted as zeros.
    """
    counts = Counter(doc)
    n = len(doc)
    total = np.zeros(words.dimension)
    weight_sum = 0.0
    # sorted iteration makes the result independent of token order
    for word in sorted(counts):
        vec = words.vector(word)
        if vec is None:
            continue
        w = (counts[word] / n) * model.idf(word)
        total += w * vec
        weight_sum += w
    if weight_sum == 0.0:
        raise NoKnownTokens("no token of the document has a vector")
    return total / weight_sum


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cannot compare vectors of shape {u.shape} and {v.shape}")
    nu = float(np.sqrt(np.dot(u, u)))
    nv = float(np.sqrt(np.dot(v, v)))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    value = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, value))
