"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FableAnalogyError(Exception):
    """Base class for every error raised by this package."""


# -- ingestion ---------------------------------------------------------------

class MalformedRecord(FableAnalogyError, ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class DuplicateId(MalformedRecord):
    pass


class UnknownTag(MalformedRecord):
    pass


class UnknownStoryId(MalformedRecord):
    pass


class MissingDimension(MalformedRecord):
    pass


class ConstraintViolation(MalformedRecord):
    pass


class NegatedTriple(ConstraintViolation):
    pass


# -- text similarity ---------------------------------------------------------

class EmptyCorpus(FableAnalogyError, ValueError):
    pass


class WordNotInDoc(FableAnalogyError, KeyError):
    pass


class NoKnownTokens(FableAnalogyError, ValueError):
    pass


class DimensionMismatch(FableAnalogyError, ValueError):
    pass


class ZeroVector(FableAnalogyError, ValueError):
    pass


# -- shapes ------------------------------------------------------------------

class NoScoredTokens(FableAnalogyError, ValueError):
    pass


class EmptySeries(FableAnalogyError, ValueError):
    pass


class ParameterMismatch(FableAnalogyError, ValueError):
    pass


# -- frames ------------------------------------------------------------------

class EmptyReference(FableAnalogyError, ValueError):
    pass


class EmptyTag(FableAnalogyError, ValueError):
    pass


# -- pairing -----------------------------------------------------------------

class MissingResource(FableAnalogyError, LookupError):
    pass


class TooFewStories(FableAnalogyError, ValueError):
    pass


class NoAnnotatedPairs(FableAnalogyError, ValueError):
    pass


# -- learning ----------------------------------------------------------------

class SingleClass(FableAnalogyError, ValueError):
    pass


class InsufficientData(FableAnalogyError, ValueError):
    pass


class UnknownStory(FableAnalogyError, KeyError):
    pass


# -- metrics -----------------------------------------------------------------

class EmptyCounts(FableAnalogyError, ValueError):
    pass


class ItemMismatch(FableAnalogyError, ValueError):
    pass


class EmptyItems(FableAnalogyError, ValueError):
    pass


class ZeroVariance(FableAnalogyError, ValueError):
    pass


class LengthMismatch(FableAnalogyError, ValueError):
    pass


class TooFewAnnotations(FableAnalogyError, ValueError):
    pass


# -- warnings ----------------------------------------------------------------

class InsufficientPairsWarning(UserWarning):
    """Transfer-pair construction could not reach the requested size."""


class SyntheticEmbeddingWarning(UserWarning):
    """Similarity values come from the hash fallback, not real vectors."""
