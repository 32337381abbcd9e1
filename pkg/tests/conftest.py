from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from fable_analogy.corpus import MoralTag, Story, load_annotations, load_corpus, load_lexicon
from fable_analogy.frames import FrameSeq, load_frames
from fable_analogy.resources import build_resources
from fable_analogy.textsim import HashProvider

DATA = Path(__file__).parent / "data"

SYLLABLES = [a + b for a in "bdfgklmnprst" for b in "aeiou"]
FRAME_LABELS = ["Motion", "Desiring", "Killing", "Request", "Travel", "Statement"]


def fake_word(rng: np.random.Generator) -> str:
    return "".join(rng.choice(SYLLABLES, size=int(rng.integers(1, 3))))


def synthetic_corpus(n: int, rng: np.random.Generator, *, vocab: int = 25, duplicate_rate: float = 0.2,
                     labels: list[str] = FRAME_LABELS, max_frames: int = 6):
    """Random stories and frame sequences; some stories repeat earlier ones
    verbatim so that similarity ties occur."""
    words = sorted({fake_word(rng) for _ in range(vocab)})
    ids = [f"s{i:02d}" for i in rng.permutation(max(n, 1) * 3)[:n]]
    stories, frames = [], {}
    for i, sid in enumerate(ids):
        if i > 0 and rng.random() < duplicate_rate:
            src = stories[int(rng.integers(i))]
            text = src.text
            seq = frames[src.id].frames
        else:
            text = " ".join(rng.choice(words, size=int(rng.integers(3, 12))))
            seq = tuple(rng.choice(labels, size=int(rng.integers(1, max_frames + 1))))
        tags = frozenset(rng.choice(list(MoralTag), size=int(rng.integers(0, 3)), replace=False))
        stories.append(Story(sid, sid, text, "moral " + text if tags else None, tags))
        frames[sid] = FrameSeq(sid, tuple(str(x) for x in seq))
    return stories, frames


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(DATA / "corpus.jsonl")


@pytest.fixture(scope="session")
def annotations(corpus):
    return load_annotations(DATA / "annotations.jsonl", corpus)


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(DATA / "lexicon.tsv")


@pytest.fixture(scope="session")
def frames():
    return {fs.story_id: fs for fs in load_frames(DATA / "frames.jsonl")}


@pytest.fixture(scope="session")
def resources(corpus, frames, lexicon):
    provider = HashProvider(32, 7)
    return build_resources(corpus, words=provider, docs=provider, frames=frames, lexicon=lexicon)


# one summary line per acceptance criterion, collected by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
