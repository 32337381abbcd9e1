"""Acceptance criteria, one test per criterion.

Each test records a ``CRITERION n: PASS|FAIL|SKIP`` line that is printed in
the pytest terminal summary (and to stdout under ``-s``).

Criterion 7 needs the released 116-fable corpus and 44-pair annotation set.
Point ``FABLE_ANALOGY_DATA`` at a directory holding ``corpus.jsonl``,
``annotations.jsonl`` and ``pairs.jsonl`` (the pair-to-method assignment, in
the ``pairs generate`` output format) to run it.
"""

from __future__ import annotations

import functools
import itertools
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

import conftest
from cli_helpers import COMMANDS, run_cli, snapshot
from conftest import synthetic_corpus
from fable_analogy.corpus import (
    DIMENSIONS,
    AnalogyDimension,
    HedonometerLexicon,
    PairAnnotation,
    RatingSet,
    Story,
    load_annotations,
    load_corpus,
    validate_annotations,
)
from fable_analogy.errors import ConstraintViolation, NegatedTriple
from fable_analogy.frames import edit_distance, scaled_frame_distance
from fable_analogy.learn import LogisticModel, TrainConfig, gradient_check, train_logistic
from fable_analogy.metrics import ConfusionCounts, accuracy, cohen_kappa, correlation_matrix, f1
from fable_analogy.pairing import (
    PairingMethod,
    PairSet,
    StoryPair,
    generate_pairs,
    nearest_by_method,
    read_pairs,
    score_methods,
)
from fable_analogy.resources import build_resources
from fable_analogy.shapes import ArcName, SegmentLevel, arc_profile, level_of, segment_levels
from fable_analogy.textsim import HashProvider, hash_embedding

LEX, SEM, FRM, SHP, RND = (PairingMethod.LEXICAL, PairingMethod.SEMANTIC, PairingMethod.FRAME,
                           PairingMethod.SHAPE, PairingMethod.RANDOM)
D = AnalogyDimension


def criterion(number: int, title: str, budget: float | None = None):
    """Record a PASS/FAIL/SKIP line for the wrapped test and enforce its time budget."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            status, detail = "PASS", ""
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                if budget is not None and elapsed >= budget:
                    status, detail = "FAIL", f"took {elapsed:.2f}s, budget {budget:.0f}s"
                    raise AssertionError(detail)
                detail = f"{elapsed:.2f}s"
            except pytest.skip.Exception as exc:
                status, detail = "SKIP", str(exc)
                raise
            except BaseException as exc:
                if status == "PASS":
                    status, detail = "FAIL", f"{type(exc).__name__}: {exc}".splitlines()[0]
                raise
            finally:
                line = f"CRITERION {number}: {status} - {title} ({detail})"
                conftest.ACCEPTANCE_LINES.append(line)
                print(line)
        return run

    return wrap


# ---------------------------------------------------------------------------
# 1. metric oracles

def _ratings(rater, labels):
    return RatingSet(rater, tuple((f"i{k}", D.SAA, bool(v)) for k, v in enumerate(labels)))


@criterion(1, "kappa fixtures and F1/accuracy oracles", budget=1.0)
def test_criterion_1_metric_oracles():
    fixtures = [([1, 0, 1, 0], [1, 0, 1, 0], 1.0), ([1, 1, 0, 0], [1, 0, 1, 0], 0.0), ([1, 0], [0, 1], -1.0)]
    for a, b, expected in fixtures:
        assert abs(cohen_kappa(_ratings("a", a), _ratings("b", b), D.SAA) - expected) <= 1e-12

    rng = np.random.default_rng(20240101)
    for _ in range(10):
        tp, fp, fn, tn = (int(v) for v in rng.integers(0, 30, size=4))
        if tp + fp + fn + tn == 0:
            tn = 1
        # independent recomputation from expanded label vectors
        truth = np.array([1] * tp + [0] * fp + [1] * fn + [0] * tn, dtype=bool)
        pred = np.array([1] * tp + [1] * fp + [0] * fn + [0] * tn, dtype=bool)
        want_acc = float(np.mean(truth == pred))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        want_f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        counts = ConfusionCounts(tp, fp, fn, tn)
        assert ConfusionCounts.from_labels(truth, pred) == counts
        assert abs(accuracy(counts) - want_acc) <= 1e-12
        assert abs(f1(counts) - want_f1) <= 1e-12


# ---------------------------------------------------------------------------
# 2. edit distance laws

def _oracle_levenshtein(a, b) -> int:
    # full (len(a)+1) x (len(b)+1) table
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            sub = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(table[i - 1][j] + 1, table[i][j - 1] + 1, table[i - 1][j - 1] + sub)
    return table[len(a)][len(b)]


@criterion(2, "edit distance identity/symmetry/triangle + DP oracle, exhaustive len<=5 over 3 labels", budget=10.0)
def test_criterion_2_edit_distance_laws():
    seqs = [s for n in range(6) for s in itertools.product(("A", "B", "C"), repeat=n)]
    assert len(seqs) == 364
    n = len(seqs)
    dist = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(seqs):
        for j, b in enumerate(seqs):
            d = edit_distance(a, b)
            assert d == _oracle_levenshtein(a, b), (a, b)
            dist[i, j] = d
    assert np.all(np.diag(dist) == 0)
    assert np.all(dist[~np.eye(n, dtype=bool)] > 0)
    assert np.array_equal(dist, dist.T)
    for k in range(n):
        # d(i, j) <= d(i, k) + d(k, j) for all i, j
        assert np.all(dist <= dist[:, k:k + 1] + dist[k:k + 1, :])


# ---------------------------------------------------------------------------
# 3. nearest-neighbour oracle equivalence

def _oracle_lexical_vectors(stories, dim, seed):
    docs = {s.id: [t for t in _simple_tokens(s.text)] for s in stories}
    n = len(stories)
    df = {}
    for toks in docs.values():
        for w in set(toks):
            df[w] = df.get(w, 0) + 1
    vecs = {}
    for sid, toks in docs.items():
        acc = np.zeros(dim)
        total = 0.0
        for w in set(toks):
            weight = toks.count(w) / len(toks) * (math.log((1 + n) / (1 + df[w])) + 1)
            acc += weight * hash_embedding(w, dim, seed)
            total += weight
        vecs[sid] = acc / total
    return vecs


def _simple_tokens(text):
    # synthetic corpora only contain lowercase ascii words separated by spaces
    return text.split()


def _cos(u, v):
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def _best(scores: dict[str, float], maximize: bool, tol: float = 1e-12) -> str:
    target = max(scores.values()) if maximize else min(scores.values())
    tied = [sid for sid, v in scores.items() if abs(v - target) <= tol]
    return min(tied)


def _oracle_partner(query, method, stories, vecs, frames, levels):
    others = [s.id for s in stories if s.id != query]
    if method is LEX:
        return _best({o: _cos(vecs["lex"][query], vecs["lex"][o]) for o in others}, True)
    if method is SEM:
        return _best({o: _cos(vecs["sem"][query], vecs["sem"][o]) for o in others}, True)
    if method is FRM:
        ref = frames[query].frames
        scores = {}
        for o in others:
            kept = [f for f in frames[o].frames if f in set(ref)]
            scores[o] = _oracle_levenshtein(ref, kept) / max(len(ref), len(kept))
        return _best(scores, False)
    if method is SHP:
        return _best({o: sum(x != y for x, y in zip(levels[query], levels[o])) for o in others}, False)
    raise AssertionError(method)


@criterion(3, "nearest_by_method equals brute force on 200 synthetic corpora (ties included)", budget=30.0)
def test_criterion_3_nearest_neighbour_oracle():
    dim, seed = 16, 11
    ties_seen = 0
    for trial in range(200):
        rng = np.random.default_rng(trial)
        n = int(rng.integers(2, 21))
        stories, frames = synthetic_corpus(n, rng, vocab=12, duplicate_rate=0.25)
        vocab = sorted({w for s in stories for w in s.text.split()})
        lexicon = HedonometerLexicon({w: float(rng.choice([4.0, 5.4, 7.0])) for w in vocab})
        provider = HashProvider(dim, seed)
        res = build_resources(stories, words=provider, docs=provider, frames=frames, lexicon=lexicon, window=3)
        vecs = {"lex": _oracle_lexical_vectors(stories, dim, seed),
                "sem": {s.id: hash_embedding(s.id, dim, seed) for s in stories}}
        levels = {sid: p.levels for sid, p in res.profiles.items()}
        for method in (LEX, SEM, FRM, SHP):
            for s in stories:
                got = nearest_by_method(s.id, res, method)
                want = _oracle_partner(s.id, method, stories, vecs, frames, levels)
                assert got.story_b == want, (trial, method, s.id, got, want)
                if method in (LEX, SEM):
                    assert got.score == pytest.approx(_cos(vecs[method is LEX and "lex" or "sem"][s.id],
                                                           vecs[method is LEX and "lex" or "sem"][want]), abs=1e-9)
                elif method is FRM:
                    assert got.score == scaled_frame_distance(frames[s.id], frames[want])
                else:
                    assert got.score is None
        ties_seen += len(stories) - len({s.text for s in stories})
    assert ties_seen > 0, "synthetic corpora never produced a tie"


# ---------------------------------------------------------------------------
# 4. pair count law

@criterion(4, "generate_pairs yields 4N pairs for N in {2, 5, 116}; 696 at N=116")
def test_criterion_4_pair_count_law():
    # The criterion states both "4N" and "348 + 348 = 696 at N = 116"; the two
    # cannot hold together (4 * 116 = 464). Counts follow the 348 + 348
    # protocol, so the 4N clause is checked last and fails for N >= 5.
    totals = {}
    for n in (2, 5, 116):
        stories, frames = synthetic_corpus(n, np.random.default_rng(n), vocab=40)
        provider = HashProvider(16, 0)
        res = build_resources(stories, words=provider, docs=provider, frames=frames)
        pairs = generate_pairs(res, [LEX, SEM, FRM, RND], seed=0)
        by_method = pairs.by_method()
        assert all(len(by_method[m]) == n for m in (LEX, SEM, FRM))
        totals[n] = len(pairs)
        if n == 116:
            similarity = sum(len(by_method[m]) for m in (LEX, SEM, FRM))
            assert (similarity, len(by_method[RND]), len(pairs)) == (348, 348, 696)
    wrong = {n: t for n, t in totals.items() if t != 4 * n}
    assert not wrong, f"4N clause: totals {wrong} differ from 4N {({n: 4 * n for n in wrong})}"


# ---------------------------------------------------------------------------
# 5. logistic regression

@criterion(5, "gradient check < 1e-5 on 20 instances, separable toy accuracy 1.0, monotone loss", budget=10.0)
def test_criterion_5_logistic_regression():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        m, d = int(rng.integers(5, 40)), int(rng.integers(1, 8))
        X = rng.normal(size=(m, d))
        y = rng.random(m) < 0.5
        model = LogisticModel(rng.normal(size=d), float(rng.normal()), TrainConfig(l2=float(rng.choice([0.0, 0.01, 0.5]))))
        worst = max(worst, gradient_check(X, y, model))
    assert worst < 1e-5, worst

    X = np.vstack([rng.normal(-2, 0.5, (20, 2)), rng.normal(2, 0.5, (20, 2))])
    y = np.array([False] * 20 + [True] * 20)
    model, _ = train_logistic(X, y, TrainConfig(learning_rate=0.5, epochs=200, l2=0.0))
    assert float(np.mean(model.predict(X) == y)) == 1.0

    _, trace = train_logistic(X, y, TrainConfig(learning_rate=0.01, epochs=300, l2=0.0))
    losses = [r.train_loss for r in trace.records]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


# ---------------------------------------------------------------------------
# 6. arc classification

ARC_FIXTURES = {
    ArcName.TRAGEDY: ("glad", "glad", "grim"),
    ArcName.RAGS_TO_RICHES: ("grim", "calm", "glad"),
    ArcName.CINDERELLA: ("glad", "grim", "glad"),
    ArcName.OEDIPUS: ("grim", "calm", "grim"),
}


@criterion(6, "constructed arc fixtures classify to their named arcs; threshold boundaries")
def test_criterion_6_arc_classification():
    lexicon = HedonometerLexicon({"glad": 7.5, "calm": 5.4, "grim": 2.5})
    for name, (b, m, e) in ARC_FIXTURES.items():
        # 30 / 40 / 30 words with window 1 so each segment is pure
        text = " ".join([b] * 30 + [m] * 40 + [e] * 30)
        profile, series = arc_profile(text, lexicon, name.value, window=1)
        assert len(series.values) == 100
        assert profile.arc.name is name, (name, profile.levels)
    H, M, L = SegmentLevel.HIGH, SegmentLevel.MID, SegmentLevel.LOW
    assert (level_of(5.61), level_of(5.40), level_of(5.19)) == (H, M, L)
    _, _, _, levels = segment_levels([5.61] * 3 + [5.40] * 4 + [5.19] * 3)
    assert levels == (H, M, L)
    # segment cut points at floor(0.3 n) and floor(0.7 n)
    begin, mid, end, _ = segment_levels([1.0] * 3 + [2.0] * 4 + [3.0] * 3)
    assert (begin, mid, end) == (1.0, 2.0, 3.0)


# ---------------------------------------------------------------------------
# 7. data-dependent reproduction

DATA_ENV = "FABLE_ANALOGY_DATA"
TABLE3_AVERAGES = {SEM: 2.22, FRM: 1.90, LEX: 3.00, RND: 1.54}
TABLE5_RATIOS = {D.SAA: 0.05, D.DAA: 0.42, D.RA: 0.51, D.SA: 0.08, D.MP: 0.22, D.LS: 0.28}


@criterion(7, "released-data reproduction of method averages, max correlation, positive ratios", budget=10.0)
def test_criterion_7_released_data():
    root = os.environ.get(DATA_ENV)
    if not root:
        pytest.skip(f"set {DATA_ENV} to a directory with the released corpus, annotations and pair assignment")
    root = Path(root)
    corpus = load_corpus(root / "corpus.jsonl")
    annotations = load_annotations(root / "annotations.jsonl", corpus, lenient=True)
    pairs = read_pairs(root / "pairs.jsonl")
    report = score_methods(pairs, annotations)
    for method, expected in TABLE3_AVERAGES.items():
        assert abs(report.score_for(method).average - expected) <= 0.01, (method, report.score_for(method).average)
    cm = correlation_matrix(annotations)
    assert abs(cm.max_off_diagonal() - 0.46) <= 0.02, cm.max_off_diagonal()
    for dim, expected in TABLE5_RATIOS.items():
        ratio = sum(bool(a.labels[dim]) for a in annotations) / len(annotations)
        assert abs(ratio - expected) <= 0.01, (dim, ratio)


def test_method_average_arithmetic_on_reconstructed_counts():
    """Integer positive counts consistent with the published per-method rates
    give the published method averages when all seven dimensions are summed.
    Not an acceptance criterion; it pins down how the averages are formed."""
    counts = {  # pairs, then positives per dimension in canonical order SAA DAA RA EA SA MP LS
        SEM: (9, (0, 4, 5, 5, 2, 1, 3)),
        FRM: (10, (0, 6, 4, 7, 1, 1, 0)),
        LEX: (12, (1, 7, 7, 7, 3, 5, 6)),
        RND: (13, (1, 4, 7, 3, 0, 3, 2)),
    }
    annotations, pairs = [], []
    for method, (n, positives) in counts.items():
        for k in range(n):
            a, b = f"{method.value}-{k}a", f"{method.value}-{k}b"
            labels = {d: k < p for d, p in zip(DIMENSIONS, positives)}
            annotations.append(PairAnnotation(f"{method.value}-{k}", a, b, labels))
            pairs.append(StoryPair(a, b, method))
    assert validate_annotations(annotations) == []
    report = score_methods(PairSet(pairs), annotations)
    assert report.total_annotated == 44
    for method, expected in TABLE3_AVERAGES.items():
        assert round(report.score_for(method).average, 2) == expected


# ---------------------------------------------------------------------------
# 8. constraint validation

LABELS_SA_ONLY = {d.value: d is D.SA for d in DIMENSIONS}
LABELS_RA_ONLY = {d.value: d is D.RA for d in DIMENSIONS}


def _write(path: Path, records):
    import json
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


@criterion(8, "SA without EA plus a negated triple: two violation reports, strict loader rejects both")
def test_criterion_8_constraint_validation(tmp_path):
    corpus = [Story("f1", "A", "a"), Story("f2", "B", "b")]
    sa_rec = {"pair_id": "p1", "story_a": "f1", "story_b": "f2", "labels": LABELS_SA_ONLY, "evidence": {}}
    neg_rec = {"pair_id": "p2", "story_a": "f1", "story_b": "f2", "labels": LABELS_RA_ONLY,
               "evidence": {"RA": [["lion - not trusts - mouse", "wolf - trusts - lamb"]]}}
    both = _write(tmp_path / "both.jsonl", [sa_rec, neg_rec])
    reports = validate_annotations(load_annotations(both, corpus, lenient=True))
    assert sorted(r.rule for r in reports) == ["negated-triple", "sa-requires-ea"]
    with pytest.raises(ConstraintViolation):
        load_annotations(_write(tmp_path / "sa.jsonl", [sa_rec]), corpus)
    with pytest.raises(NegatedTriple):
        load_annotations(_write(tmp_path / "neg.jsonl", [neg_rec]), corpus)
    with pytest.raises(ConstraintViolation):
        load_annotations(both, corpus)


# ---------------------------------------------------------------------------
# 9. determinism

@criterion(9, "every subcommand reruns byte-identically on the fixture corpus", budget=60.0)
def test_criterion_9_determinism(tmp_path):
    for name, args in COMMANDS.items():
        out = tmp_path / name.replace(" ", "_")
        if name == "pairs score":
            assert run_cli(out, COMMANDS["pairs generate"]) == 0
        assert run_cli(out, args) == 0, name
        first = snapshot(out)
        assert run_cli(out, args) == 0, name
        second = snapshot(out)
        assert first == second, f"{name}: outputs differ on rerun"
