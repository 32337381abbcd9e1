import numpy as np
import pytest

from fable_analogy.corpus import DIMENSIONS, AnalogyDimension, PairAnnotation
from fable_analogy.errors import NoAnnotatedPairs, TooFewStories, UnknownStory
from fable_analogy.pairing import (
    PairingMethod,
    PairSet,
    StoryPair,
    dedup,
    generate_pairs,
    nearest_by_method,
    read_pairs,
    score_methods,
    write_pairs,
)
from fable_analogy.resources import build_resources
from fable_analogy.textsim import HashProvider

from conftest import synthetic_corpus

LEX, SEM, FRM, SHP, RND = (PairingMethod.LEXICAL, PairingMethod.SEMANTIC, PairingMethod.FRAME,
                           PairingMethod.SHAPE, PairingMethod.RANDOM)


def test_method_parse():
    assert PairingMethod.parse("frames") is FRM
    with pytest.raises(ValueError):
        PairingMethod.parse("bogus")


def test_nearest_never_self_and_deterministic(resources):
    for sid in resources.order:
        for m in (LEX, SEM, FRM):
            p = nearest_by_method(sid, resources, m)
            assert p.story_b != sid and p.story_a == sid
            assert p == nearest_by_method(sid, resources, m)


def test_identical_stories_pair_up():
    rng = np.random.default_rng(5)
    stories, frames = synthetic_corpus(6, rng, duplicate_rate=0.0)
    dup = stories[0].__class__("zz", "zz", stories[0].text, None, frozenset())
    stories.append(dup)
    frames["zz"] = frames[stories[0].id].__class__("zz", frames[stories[0].id].frames)
    res = build_resources(stories, words=HashProvider(16, 0), frames=frames)
    p = nearest_by_method("zz", res, LEX)
    assert p.story_b == stories[0].id and p.score == pytest.approx(1.0)
    assert nearest_by_method("zz", res, FRM).score == 0.0


def test_too_few_and_unknown():
    stories, frames = synthetic_corpus(1, np.random.default_rng(0))
    res = build_resources(stories, words=HashProvider(8, 0), frames=frames)
    with pytest.raises(TooFewStories):
        nearest_by_method(stories[0].id, res, LEX)
    stories, frames = synthetic_corpus(3, np.random.default_rng(0))
    res = build_resources(stories, words=HashProvider(8, 0), frames=frames)
    with pytest.raises(UnknownStory):
        nearest_by_method("nope", res, LEX)


def test_k_best():
    stories, frames = synthetic_corpus(8, np.random.default_rng(3))
    res = build_resources(stories, words=HashProvider(8, 0), frames=frames)
    best = nearest_by_method(res.order[0], res, LEX, k=3)
    assert len(best) == 3 and best[0] == nearest_by_method(res.order[0], res, LEX)
    assert best[0].score >= best[1].score >= best[2].score


def test_random_pairs_seeded(resources):
    a = generate_pairs(resources, [RND], seed=1)
    b = generate_pairs(resources, [RND], seed=1)
    c = generate_pairs(resources, [RND], seed=2)
    assert a.pairs == b.pairs and a.pairs != c.pairs
    assert all(p.story_a != p.story_b for p in a.pairs)


def test_dedup_and_round_trip(tmp_path, resources):
    ps = generate_pairs(resources, [LEX, SEM, FRM, RND], seed=0)
    n = len(resources.order)
    assert len(ps) == 3 * n + 3 * n
    assert len(generate_pairs(resources, [LEX, RND], seed=0, random_per_story=1)) == 2 * n
    d = dedup(ps)
    assert len(d) <= len(ps) and d.dedup_policy
    assert len({(p.method, p.key) for p in d.pairs}) == len(d)
    write_pairs(ps, tmp_path / "p.jsonl")
    back = read_pairs(tmp_path / "p.jsonl")
    assert back.pairs == ps.pairs and back.seed == ps.seed


def test_random_partners_distinct_per_story():
    stories, frames = synthetic_corpus(3, np.random.default_rng(1))
    res = build_resources(stories, words=HashProvider(8, 0), docs=HashProvider(8, 0), frames=frames)
    ps = generate_pairs(res, [LEX, SEM, FRM, RND], seed=4)
    rnd = [p for p in ps.pairs if p.method is RND]
    # three partners wanted, only two other stories exist
    assert len(rnd) == 3 * 2
    for q in res.order:
        mine = [p.story_b for p in rnd if p.story_a == q]
        assert len(set(mine)) == 2 and q not in mine


def ann(pid, a, b, **true):
    return PairAnnotation(pid, a, b, {d: d.value in true for d in DIMENSIONS})


def test_score_methods_rates():
    pairs = PairSet([StoryPair("a", "b", LEX), StoryPair("c", "d", LEX), StoryPair("b", "a", RND)])
    anns = [ann("1", "a", "b", SAA=True, RA=True), ann("2", "d", "c", RA=True), ann("3", "x", "y")]
    report = score_methods(pairs, anns)
    lex = report.score_for(LEX)
    assert lex.count == 2 and lex.average == pytest.approx(1.5)
    assert lex.rates[AnalogyDimension.RA] == 1.0 and lex.rates[AnalogyDimension.SAA] == 0.5
    rnd = report.score_for(RND)
    assert rnd.count == 1 and rnd.average == 2.0
    assert report.unmatched == ["3"]
    with pytest.raises(NoAnnotatedPairs):
        score_methods(pairs, [ann("9", "x", "y")])


def test_score_methods_dimension_subset():
    pairs = PairSet([StoryPair("a", "b", LEX)])
    dims = [d for d in DIMENSIONS if d is not AnalogyDimension.EA]
    report = score_methods(pairs, [ann("1", "a", "b", EA=True, SA=True)], dimensions=dims)
    assert report.score_for(LEX).average == 1.0
