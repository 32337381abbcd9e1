"""Command-line entry point: ``fable-analogy <command> [options]``.

Commands: stats, shapes, pairs {generate,score}, cluster, analogy, transfer,
iaa, validate. Every run writes its tables under ``--out`` (default
``$FABLE_ANALOGY_OUT`` or ``./fable-analogy-out``) together with a
``manifest_<command>.json`` recording the resolved configuration and the
SHA-256 of each input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import reports
from .corpus import (
    AnalogyDimension,
    Story,
    load_annotations,
    load_corpus,
    load_lexicon,
    load_ratings,
    moral_distribution,
    validate_annotations,
)
from .errors import FableAnalogyError, ItemMismatch, MissingResource
from .frames import FrameSeq, load_frames
from .learn import (
    TrainConfig,
    build_transfer_pairs,
    clustering_stories,
    frame_feature_matrix,
    middle_window,
    moral_feature_matrix,
    one_vs_all_train,
    run_transfer,
    train_analogy_classifiers,
)
from .metrics import correlation_matrix, iaa_report
from .pairing import PairingMethod, dedup, generate_pairs, read_pairs, score_methods, write_pairs
from .resources import build_resources
from .shapes import DEFAULT_BAND, DEFAULT_NEUTRAL, DEFAULT_WINDOW
from .textsim import STOPWORDS, HashProvider, parse_provider_spec

log = logging.getLogger("fable_analogy")

OUT_ENV = "FABLE_ANALOGY_OUT"
DEFAULT_OUT = "fable-analogy-out"
DEFAULT_HASH_DIM = 64


class ConfigError(FableAnalogyError):
    pass


# ---------------------------------------------------------------------------
# shared plumbing

class Run:
    """State for one command invocation: config, inputs, outputs."""

    def __init__(self, args: argparse.Namespace, command: str):
        self.args = args
        self.command = command
        self.out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        self.writer = reports.TableWriter(self.out, args.format)
        self.inputs: dict[str, str | None] = {}
        self.notes: list[str] = []
        self.words = self.docs = None

    def input(self, name: str, path: str | None, required: bool = True) -> str | None:
        if path is None:
            if required:
                raise ConfigError(f"{self.command}: --{name} is required")
            return None
        if not Path(path).is_file():
            raise ConfigError(f"{self.command}: {name} file not found: {path}")
        self.inputs[name] = path
        return path

    def corpus(self) -> list[Story]:
        return load_corpus(self.input("corpus", self.args.corpus))

    def frames(self, required: bool = False) -> dict[str, FrameSeq] | None:
        path = self.input("frames", self.args.frames, required)
        return {fs.story_id: fs for fs in load_frames(path)} if path else None

    def lexicon(self, required: bool = False):
        path = self.input("lexicon", self.args.lexicon, required)
        return load_lexicon(path) if path else None

    def providers(self):
        words = docs = None
        for spec in self.args.embeddings or []:
            kind, provider = parse_provider_spec(spec)
            if kind != "hash":
                self.inputs[f"embeddings:{kind}"] = spec.partition(":")[2] if ":" in spec else spec
            if kind in ("hash", "words"):
                words = provider
            if kind in ("hash", "docs"):
                docs = provider
        if words is None:
            words = HashProvider(DEFAULT_HASH_DIM, self.args.seed)
        if docs is None:
            docs = HashProvider(words.dimension, self.args.seed)
        for what, p in (("word vectors", words), ("document vectors", docs)):
            if p.synthetic:
                msg = f"NOTICE: {what} come from the hash fallback ({p!r}); similarity values are synthetic"
                self.notes.append(msg)
                print(msg, file=sys.stderr)
        return words, docs

    def train_config(self) -> TrainConfig:
        a = self.args
        return TrainConfig(learning_rate=a.lr, epochs=a.epochs, l2=a.l2, seed=a.seed, threshold=a.threshold)

    def finish(self, extra: dict | None = None) -> None:
        config = {k: v for k, v in sorted(vars(self.args).items()) if k != "func"}
        config["out"] = str(self.out)
        if self.notes:
            config["notes"] = self.notes
        if extra:
            config.update(extra)
        reports.write_manifest(self.out, self.command, config, self.inputs, self.writer.written)


def _safe_name(story_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", story_id)


# ---------------------------------------------------------------------------
# commands

def cmd_stats(args) -> int:
    run = Run(args, "stats")
    stories = run.corpus()
    counts = moral_distribution(stories)
    header, rows = reports.moral_table(counts)
    run.writer.write("moral_distribution", header, rows)
    ranked = sorted(rows, key=lambda r: (-r[1], r[0]))
    run.writer.write_text("plots/moral_distribution.csv", reports.plot_data(ranked, ("tag", "count")))
    untagged = sum(1 for s in stories if not s.tags)
    summary = [
        ["stories", len(stories)],
        ["tagged", len(stories) - untagged],
        ["untagged", untagged],
        ["without_moral", sum(1 for s in stories if not s.moral)],
        ["tag_assignments", sum(counts.values())],
    ]
    run.writer.write("corpus_summary", ["statistic", "value"], summary)
    if args.annotations:
        anns = load_annotations(run.input("annotations", args.annotations), stories)
        run.writer.write("analogy_correlations", *reports.correlation_table(correlation_matrix(anns)))
    print(f"{len(stories)} stories, {untagged} untagged; wrote {run.out}")
    run.finish()
    return 0


def cmd_shapes(args) -> int:
    run = Run(args, "shapes")
    stories = run.corpus()
    lexicon = run.lexicon(required=True)
    res = build_resources(stories, lexicon=lexicon, window=args.window, neutral=args.neutral, band=args.band)
    rows = []
    for sid in res.order:
        if sid not in res.profiles:
            continue
        p = res.profiles[sid]
        rows.append([sid, p.begin_avg, p.mid_avg, p.end_avg, "-".join(lv.value for lv in p.levels),
                     str(p.arc), p.coverage, len(res.series[sid].values)])
        points = enumerate(res.series[sid].values)
        run.writer.write_text(f"series/{_safe_name(sid)}.csv", reports.plot_data(points, ("window", "happiness")))
    run.writer.write("arcs", ["id", "begin_avg", "mid_avg", "end_avg", "levels", "arc", "coverage", "series_length"], rows)
    run.writer.write("shapes_skipped", ["id", "reason"], [[sid, "NoScoredTokens"] for sid in res.skipped_shapes])
    for sid in res.skipped_shapes:
        print(f"skipped {sid}: no token in the lexicon", file=sys.stderr)
    print(f"{len(rows)} arcs, {len(res.skipped_shapes)} skipped; wrote {run.out}")
    run.finish()
    return 0


def cmd_pairs_generate(args) -> int:
    run = Run(args, "pairs generate")
    stories = run.corpus()
    methods = [PairingMethod.parse(m) for m in args.methods.split(",") if m.strip()]
    needs = set(methods)
    words = docs = None
    if needs & {PairingMethod.LEXICAL, PairingMethod.SEMANTIC}:
        words, docs = run.providers()
    frames = run.frames(required=PairingMethod.FRAME in needs)
    lexicon = run.lexicon(required=PairingMethod.SHAPE in needs)
    res = build_resources(stories, words=words, docs=docs, frames=frames, lexicon=lexicon,
                          stopwords=STOPWORDS if args.stopwords else None,
                          window=args.window, neutral=args.neutral, band=args.band)
    per_story = args.random_per_story
    if per_story is None:
        per_story = args.k * max(1, sum(m is not PairingMethod.RANDOM for m in methods))
    parts = []
    for method in methods:
        try:
            parts.append(generate_pairs(res, [method], args.seed, k=args.k, random_per_story=per_story))
        except MissingResource as exc:
            raise MissingResource(f"{method.value}: {exc}") from None
    pairs = parts[0]
    for extra in parts[1:]:
        pairs.pairs.extend(extra.pairs)
    if args.dedup:
        pairs = dedup(pairs)
    run.out.mkdir(parents=True, exist_ok=True)
    path = run.out / "pairs.jsonl"
    write_pairs(pairs, path)
    run.writer.written.append(path)
    by = pairs.by_method()
    run.writer.write("pair_counts", ["method", "pairs"], [[m.value, len(by.get(m, []))] for m in methods])
    print(f"{len(pairs)} pairs from {len(stories)} stories; wrote {path}")
    run.finish()
    return 0


def cmd_pairs_score(args) -> int:
    run = Run(args, "pairs score")
    stories = run.corpus()
    anns = load_annotations(run.input("annotations", args.annotations), stories)
    pairs_path = args.pairs or str(run.out / "pairs.jsonl")
    pairs = read_pairs(run.input("pairs", pairs_path))
    lexicon = run.lexicon()
    profiles = None
    if lexicon is not None:
        profiles = build_resources(stories, lexicon=lexicon, window=args.window,
                                   neutral=args.neutral, band=args.band).profiles
    dims = reports.dimension_list(args.dimensions)
    report = score_methods(pairs, anns, profiles=profiles, dimensions=dims)
    run.writer.write("method_scores", *reports.method_table(report))
    run.writer.write("analogy_correlations", *reports.correlation_table(correlation_matrix(anns, dims)))
    if report.unmatched:
        print(f"{len(report.unmatched)} annotated pairs match no generated pair", file=sys.stderr)
    if AnalogyDimension.EA in dims:
        run.notes.append("EA is reported although the published method table has no EA row")
    print(f"scored {report.total_annotated} annotated pairs; wrote {run.out}")
    run.finish()
    return 0


CLUSTER_MODES = ("moral-embedding", "frame-counts", "frame-counts-top15")


def cmd_cluster(args) -> int:
    run = Run(args, f"cluster {args.features}")
    stories = clustering_stories(run.corpus())
    if args.features == "moral-embedding":
        words, _ = run.providers()
        res = build_resources(stories, words=words)
        X, kept = moral_feature_matrix(stories, res)
    else:
        if not args.frames:
            raise ConfigError(f"cluster --features {args.features} needs --frames")
        frames = run.frames(required=True)
        top_k = args.top_k if args.features == "frame-counts-top15" else None
        X, kept = frame_feature_matrix(stories, frames, top_k=top_k)
    report = one_vs_all_train(X, [s.tags for s in kept], run.train_config(), repeats=args.repeats)
    report.feature_mode = args.features
    run.writer.write(f"cluster_report_{args.features.replace('-', '_')}", *reports.cluster_table(report))
    for tag, why in report.skipped.items():
        print(f"skipped {tag.value}: {why}", file=sys.stderr)
    print(f"{len(report.results)} tags trained on {X.rows} stories x {X.cols} features; wrote {run.out}")
    run.finish()
    return 0


def _analysis_resources(run: Run, stories: list[Story]):
    words, docs = run.providers()
    run.words, run.docs = words, docs
    return build_resources(stories, words=words, docs=docs, frames=run.frames(), lexicon=run.lexicon(),
                           window=run.args.window, neutral=run.args.neutral, band=run.args.band)


def cmd_analogy(args) -> int:
    run = Run(args, "analogy")
    stories = run.corpus()
    anns = load_annotations(run.input("annotations", args.annotations), stories)
    res = _analysis_resources(run, stories)
    results = train_analogy_classifiers(anns, res, run.train_config(), dimensions=reports.dimension_list(args.dimensions))
    run.writer.write("analogy_report", *reports.analogy_table(results))
    for r in results:
        if r.model is not None:
            run.writer.write_text(f"models/{r.dimension.value}.json",
                                  json.dumps(r.model.to_record(), indent=2) + "\n")
        else:
            print(f"{r.dimension.value}: untrainable (single class)", file=sys.stderr)
    print(f"trained {sum(r.model is not None for r in results)} of {len(results)} classifiers; wrote {run.out}")
    run.finish()
    return 0


def cmd_transfer(args) -> int:
    run = Run(args, "transfer")
    target_stories = run.corpus()
    anns = load_annotations(run.input("annotations", args.annotations), target_stories)
    if args.source:
        source_stories = load_corpus(run.input("source", args.source))
    else:
        source_stories = target_stories
    trimmed = 0
    windowed = []
    for s in source_stories:
        if len(s.text.split()) > args.middle_window:
            s = replace(s, text=middle_window(s.text, args.middle_window))
            trimmed += 1
        windowed.append(s)
    if trimmed:
        msg = f"middle_window: {trimmed} source documents cut to {args.middle_window} words"
        log.info(msg)
        run.notes.append(msg)
        print(msg, file=sys.stderr)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pairs = build_transfer_pairs(windowed, args.target_size, args.seed)
    for w in caught:
        run.notes.append(f"warning: {w.message}")
        print(f"warning: {w.message}", file=sys.stderr)

    target_res = _analysis_resources(run, target_stories)
    if args.source_frames:
        source_frames = load_frames(run.input("source_frames", args.source_frames))
    else:
        source_frames = None if args.source else target_res.frames
    source_res = build_resources(windowed, words=run.words, docs=run.docs, frames=source_frames,
                                 lexicon=run.lexicon(), window=args.window, neutral=args.neutral, band=args.band)
    dims = reports.dimension_list(args.dimensions)
    result = run_transfer(pairs, source_res, anns, target_res, run.train_config(), dimensions=dims)

    run.writer.write("transfer_pairs", ["story_a", "story_b", "same_tag"],
                     [[p.story_a, p.story_b, p.label] for p in pairs])
    run.writer.write_text("traces/source_same_tag.csv", result.source_trace.to_csv())
    for d, trace in result.dimension_traces.items():
        run.writer.write_text(f"traces/{d.value}.csv", trace.to_csv())
    run.writer.write_text("model.json", json.dumps(result.model.to_record(), indent=2) + "\n")
    last = result.source_trace.records[-1]
    rows = [["same_tag (source held-out)", last.eval_accuracy, last.eval_f1]]
    for d, trace in result.dimension_traces.items():
        r = trace.records[-1]
        rows.append([d.value, r.eval_accuracy, r.eval_f1])
    run.writer.write("transfer_report", ["target", "accuracy", "f1"], rows)
    print(f"{len(pairs)} transfer pairs, {len(result.source_trace.records)} epochs; wrote {run.out}")
    run.finish()
    return 0


def cmd_iaa(args) -> int:
    run = Run(args, "iaa")
    ratings = sorted(load_ratings(run.input("ratings", args.ratings)), key=lambda r: r.rater_id)
    if len(ratings) < 2:
        raise ConfigError("iaa needs a ratings file with at least two raters")
    dims = reports.dimension_list(args.dimensions)
    header = ["annotators"] + [d.value for d in dims]
    rows, failed = [], 0
    for i, a in enumerate(ratings):
        for b in ratings[i + 1:]:
            try:
                table = iaa_report([a, b], dims)
                rows.extend(reports.iaa_table(table)[1])
            except ItemMismatch as exc:
                failed += 1
                print(f"error: {exc}", file=sys.stderr)
                rows.append([f"{a.rater_id} VS {b.rater_id}"] + ["ItemMismatch"] * len(dims))
    run.writer.write("iaa_kappa", header, rows)
    print(f"kappa for {len(rows)} rater pairs; wrote {run.out}")
    run.finish()
    return 1 if failed else 0


def cmd_validate(args) -> int:
    run = Run(args, "validate")
    stories = run.corpus()
    anns = load_annotations(run.input("annotations", args.annotations), stories, lenient=True)
    violations = validate_annotations(anns)
    recs = [v.as_record() for v in violations]
    run.writer.write("violations", ["pair_id", "dimension", "rule", "message"],
                     [[r["pair_id"], r["dimension"], r["rule"], r["message"]] for r in recs])
    for r in recs:
        print(f"{r['pair_id']}: {r['message']} [{r['rule']}]", file=sys.stderr)
    print(f"{len(anns)} annotations, {len(violations)} violations; wrote {run.out}")
    run.finish()
    return 1 if violations else 0


# ---------------------------------------------------------------------------
# parser

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    p.add_argument("--corpus", default=d(None), help="corpus file (JSON lines)")
    p.add_argument("--frames", default=d(None), help="frame sequence file (JSON lines)")
    p.add_argument("--annotations", default=d(None), help="pair annotation file (JSON lines)")
    p.add_argument("--lexicon", default=d(None), help="hedonometer lexicon (word<TAB>score)")
    p.add_argument("--embeddings", action="append", default=d(None),
                   help="vector provider: words:PATH, docs:PATH or hash:<dim>:<seed> (repeatable)")
    p.add_argument("--seed", type=int, default=d(0), help="root random seed")
    p.add_argument("--out", default=d(None), help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--format", choices=("csv", "records"), default=d("csv"), help="table format")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def _shape_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="sliding window in words")
    p.add_argument("--neutral", type=float, default=DEFAULT_NEUTRAL, help="neutral happiness level")
    p.add_argument("--band", type=float, default=DEFAULT_BAND, help="half-width of the MID band")


def _train_flags(p: argparse.ArgumentParser, epochs: int = 200) -> None:
    p.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--threshold", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fable-analogy",
        description="Fable corpus analysis: candidate pairs, story arcs, tag and analogy classifiers, agreement.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    add("stats", cmd_stats, "moral tag distribution (and label correlations with --annotations)")
    _shape_flags(add("shapes", cmd_shapes, "hedonometric story arcs"))

    pairs = sub.add_parser("pairs", help="generate or score candidate pairs")
    pairs_sub = pairs.add_subparsers(dest="pairs_command", required=True)
    gen = pairs_sub.add_parser("generate", help="nearest-neighbour and random pairs")
    _global_flags(gen, suppress=True)
    gen.set_defaults(func=cmd_pairs_generate)
    gen.add_argument("--methods", default="lexical,semantic,frame,random")
    gen.add_argument("--k", type=int, default=1, help="partners per story and method")
    gen.add_argument("--random-per-story", type=int, default=None,
                     help="random partners per story (default: as many as the similarity methods give)")
    gen.add_argument("--dedup", action="store_true", help="drop repeated unordered pairs within a method")
    gen.add_argument("--stopwords", action="store_true", help="drop stop-words before TF-IDF weighting")
    _shape_flags(gen)
    score = pairs_sub.add_parser("score", help="per-method analogy rates against annotations")
    _global_flags(score, suppress=True)
    score.set_defaults(func=cmd_pairs_score)
    score.add_argument("--pairs", default=None, help="pair file (default <out>/pairs.jsonl)")
    score.add_argument("--dimensions", default=None, help="comma-separated subset, e.g. SAA,DAA,RA,SA,MP,LS")
    _shape_flags(score)

    cl = add("cluster", cmd_cluster, "one-vs-all moral tag classifiers")
    cl.add_argument("--features", choices=CLUSTER_MODES, default="moral-embedding")
    cl.add_argument("--repeats", type=int, default=100)
    cl.add_argument("--top-k", type=int, default=15, help="frames per tag in frame-counts-top15 mode")
    _train_flags(cl)

    an = add("analogy", cmd_analogy, "per-dimension analogy classifiers")
    an.add_argument("--dimensions", default=None)
    _train_flags(an)
    _shape_flags(an)

    tr = add("transfer", cmd_transfer, "same-tag pair classifier evaluated on analogy labels")
    tr.add_argument("--source", default=None, help="source corpus (default: --corpus)")
    tr.add_argument("--source-frames", default=None)
    tr.add_argument("--target-size", type=int, default=544)
    tr.add_argument("--middle-window", type=int, default=500)
    tr.add_argument("--dimensions", default=None)
    _train_flags(tr, epochs=20)
    _shape_flags(tr)

    ia = add("iaa", cmd_iaa, "Cohen's kappa between raters")
    ia.add_argument("--ratings", required=True)
    ia.add_argument("--dimensions", default=None)

    add("validate", cmd_validate, "report annotation constraint violations")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FableAnalogyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
