"""Analogy analysis over fable corpora.

Six analogy dimensions plus literal similarity, lexical / semantic / frame /
shape pairing, hedonometric story arcs, gradient-descent logistic
classifiers and agreement statistics.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    DIMENSIONS,
    AnalogyDimension,
    MoralTag,
    PairAnnotation,
    Story,
    load_annotations,
    load_corpus,
    moral_distribution,
    validate_annotations,
)
from .pairing import PairingMethod, generate_pairs, nearest_by_method, score_methods  # noqa: E402
from .resources import Resources, build_resources  # noqa: E402

__all__ = [
    "DIMENSIONS",
    "AnalogyDimension",
    "MoralTag",
    "PairAnnotation",
    "PairingMethod",
    "Resources",
    "Story",
    "build_resources",
    "generate_pairs",
    "load_annotations",
    "load_corpus",
    "moral_distribution",
    "nearest_by_method",
    "score_methods",
    "validate_annotations",
]
