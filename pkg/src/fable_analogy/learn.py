"""Gradient-descent logistic regression and the tasks built on it.

* moral clustering: one-vs-all classifiers over moral vectors or frame counts
* analogy-type prediction: one classifier per analogy dimension over pair features
* transfer: a same-tag pair classifier evaluated against analogy labels
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import DIMENSIONS, AnalogyDimension, MoralTag, PairAnnotation, Story
from .errors import (
    DimensionMismatch,
    InsufficientData,
    InsufficientPairsWarning,
    SingleClass,
    ZeroVector,
)
from .frames import (
    FrameSeq,
    feature_row,
    feature_vocabulary,
    frame_features,
    scaled_frame_distance,
    top_k_frames_per_tag,
)
from .metrics import ConfusionCounts, accuracy, f1
from .resources import Resources
from .seeding import rng_for
from .shapes import shape_agreement
from .textsim import cosine, lexical_overlap

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# model and trainer

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-3
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")


@dataclass
class FeatureMatrix:
    values: np.ndarray
    row_ids: list[str]
    columns: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionMismatch("feature matrix must be two-dimensional")
        if len(self.row_ids) != self.values.shape[0]:
            raise DimensionMismatch("row_ids length differs from row count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix has non-finite entries")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    config: TrainConfig = field(default_factory=TrainConfig)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X) >= self.config.threshold

    def to_record(self) -> dict:
        return {
            "dimension": int(self.weights.shape[0]),
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "config": asdict(self.config),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "LogisticModel":
        weights = np.asarray(rec["weights"], dtype=np.float64)
        if weights.shape != (int(rec["dimension"]),):
            raise DimensionMismatch("model weights disagree with declared dimension")
        return cls(weights, float(rec["bias"]), TrainConfig(**rec.get("config", {})))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_record(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LogisticModel":
        return cls.from_record(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    eval_accuracy: float | None = None
    eval_f1: float | None = None


@dataclass
class EpochTrace:
    records: list[EpochRecord] = field(default_factory=list)

    def losses(self) -> list[float]:
        return [r.train_loss for r in self.records]

    def to_csv(self) -> str:
        def fmt(v):
            return "" if v is None else repr(float(v))
        lines = ["epoch,loss,accuracy,f1"]
        lines += [f"{r.epoch},{fmt(r.train_loss)},{fmt(r.eval_accuracy)},{fmt(r.eval_f1)}" for r in self.records]
        return "\n".join(lines) + "\n"


def loss_and_grad(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus ``l2/2 * |w|^2`` (bias unpenalised)."""
    z = X @ weights + bias
    # log(1 + e^z) - y z, computed without overflow
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(weights @ weights)
    residual = sigmoid(z) - y
    m = X.shape[0]
    grad_w = X.T @ residual / m + l2 * weights
    grad_b = float(residual.sum() / m)
    return loss, grad_w, grad_b


def _as_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    Xa = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64).ravel()
    if Xa.ndim != 2 or Xa.shape[0] != ya.shape[0]:
        raise DimensionMismatch(f"X has shape {Xa.shape} but y has {ya.shape[0]} labels")
    return Xa, ya


def train_logistic(
    X: FeatureMatrix | np.ndarray,
    y: Sequence[bool] | np.ndarray,
    config: TrainConfig = TrainConfig(),
    eval: tuple[np.ndarray, Sequence[bool]] | None = None,
    callback: Callable[[int, LogisticModel], None] | None = None,
) -> tuple[LogisticModel, EpochTrace]:
    """Full-batch gradient descent from zero initialisation.

    ``train_loss`` in the trace is the objective after each epoch's update.
    If ``eval`` is given, accuracy and F1 on it are recorded every epoch;
    ``callback(epoch, model)`` sees a snapshot after each update.
    """
    Xa, ya = _as_xy(X, y)
    if Xa.shape[0] < 2:
        raise InsufficientData("need at least two training rows")
    if ya.min() == ya.max():
        raise SingleClass("training labels contain a single class")
    if eval is not None:
        Xe, ye = _as_xy(*eval)
        if Xe.shape[1] != Xa.shape[1]:
            raise DimensionMismatch("eval features differ in width from training features")
        ye_bool = ye.astype(bool)

    w = np.zeros(Xa.shape[1])
    b = 0.0
    trace = EpochTrace()
    lr = config.learning_rate
    _, gw, gb = loss_and_grad(w, b, Xa, ya, config.l2)
    for epoch in range(1, config.epochs + 1):
        w = w - lr * gw
        b = b - lr * gb
        loss, gw, gb = loss_and_grad(w, b, Xa, ya, config.l2)
        acc = f1v = None
        if eval is not None or callback is not None:
            model = LogisticModel(w.copy(), b, config)
            if eval is not None:
                counts = ConfusionCounts.from_labels(ye_bool, model.predict(Xe))
                acc, f1v = accuracy(counts), f1(counts)
            if callback is not None:
                callback(epoch, model)
        trace.records.append(EpochRecord(epoch, loss, acc, f1v))
    return LogisticModel(w, b, config), trace


def gradient_check(X, y, model: LogisticModel, epsilon: float = 1e-5, *, floor: float = 1e-4) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Components whose magnitude is below ``floor`` are divided by ``floor``
    instead, so round-off on near-zero entries does not dominate.
    """
    if not 0 < epsilon <= 1e-3:
        raise ValueError("epsilon must lie in (0, 1e-3]")
    Xa, ya = _as_xy(X, y)
    l2 = model.config.l2
    w0 = np.asarray(model.weights, dtype=np.float64)
    _, gw, gb = loss_and_grad(w0, model.bias, Xa, ya, l2)
    analytic = np.append(gw, gb)
    numeric = np.empty_like(analytic)
    for i in range(analytic.size):
        step = np.zeros(analytic.size)
        step[i] = epsilon
        wp, bp = w0 + step[:-1], model.bias + step[-1]
        wm, bm = w0 - step[:-1], model.bias - step[-1]
        lp, _, _ = loss_and_grad(wp, bp, Xa, ya, l2)
        lm, _, _ = loss_and_grad(wm, bm, Xa, ya, l2)
        numeric[i] = (lp - lm) / (2 * epsilon)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


# ---------------------------------------------------------------------------
# sampling helpers

def undersample_indices(y, seed: int) -> np.ndarray:
    ya = np.asarray(y).astype(bool)
    pos = np.flatnonzero(ya)
    neg = np.flatnonzero(~ya)
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("undersampling needs both classes")
    minority, majority = (pos, neg) if pos.size <= neg.size else (neg, pos)
    rng = np.random.default_rng(seed)
    kept = rng.choice(majority, size=minority.size, replace=False)
    return np.sort(np.concatenate([minority, kept]))


def undersample(X, y, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Randomly shrink the majority class to the minority's size."""
    Xa = X.values if isinstance(X, FeatureMatrix) else np.asarray(X)
    ya = np.asarray(y)
    idx = undersample_indices(ya, seed)
    return Xa[idx], ya[idx]


def stratified_split(y, seed: int, test_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle split that keeps each class on both sides when it can.

    Per class of size n, round(n * test_fraction) rows (at least one, at most
    n - 1) go to the test side. A single-member class stays in training.
    """
    ya = np.asarray(y).astype(bool)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in (True, False):
        idx = np.flatnonzero(ya == cls)
        idx = idx[rng.permutation(idx.size)]
        if idx.size <= 1:
            train.extend(idx)
            continue
        n_test = min(max(1, round(idx.size * test_fraction)), idx.size - 1)
        test.extend(idx[:n_test])
        train.extend(idx[n_test:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


# ---------------------------------------------------------------------------
# task 1: moral clustering

@dataclass
class TagResult:
    tag: MoralTag
    positives: int
    negatives: int
    accuracy: float
    f1: float
    repeats: int


@dataclass
class OneVsAllReport:
    results: list[TagResult]
    skipped: dict[MoralTag, str]
    feature_mode: str = ""


def one_vs_all_train(
    X: FeatureMatrix,
    story_tags: Sequence[Iterable[MoralTag]],
    config: TrainConfig = TrainConfig(),
    repeats: int = 100,
    *,
    tags: Sequence[MoralTag] = tuple(MoralTag),
    test_fraction: float = 0.2,
    standardize: bool = True,
) -> OneVsAllReport:
    """Per tag: ``repeats`` rounds of undersample, 80/20 split, train, score.

    Tags whose smaller polarity has fewer than two stories are skipped and
    listed in ``skipped``.
    """
    if len(story_tags) != X.rows:
        raise DimensionMismatch("one tag set per feature row is required")
    tag_sets = [frozenset(t) for t in story_tags]
    results, skipped = [], {}
    for tag in tags:
        y = np.array([tag in ts for ts in tag_sets])
        minority = int(min(y.sum(), (~y).sum()))
        if minority < 2:
            skipped[tag] = f"InsufficientData: {int(y.sum())} positive / {int((~y).sum())} negative stories"
            continue
        accs, f1s = [], []
        for r in range(repeats):
            rng = rng_for(config.seed, "one-vs-all", tag.value, r)
            idx = undersample_indices(y, int(rng.integers(2**63)))
            Xs, ys = X.values[idx], y[idx]
            tr, te = stratified_split(ys, int(rng.integers(2**63)), test_fraction)
            Xtr, Xte = Xs[tr], Xs[te]
            if standardize:
                sc = Standardizer.fit(Xtr)
                Xtr, Xte = sc.transform(Xtr), sc.transform(Xte)
            model, _ = train_logistic(Xtr, ys[tr], config)
            counts = ConfusionCounts.from_labels(ys[te], model.predict(Xte))
            accs.append(accuracy(counts))
            f1s.append(f1(counts))
        results.append(TagResult(tag, int(y.sum()), int((~y).sum()),
                                 float(np.mean(accs)), float(np.mean(f1s)), repeats))
    return OneVsAllReport(results, skipped)


def clustering_stories(stories: Iterable[Story]) -> list[Story]:
    """Stories usable for moral clustering: a moral and at least one tag."""
    return [s for s in stories if s.moral and s.tags]


def moral_feature_matrix(stories: Sequence[Story], res: Resources) -> tuple[FeatureMatrix, list[Story]]:
    kept = [s for s in stories if s.id in res.moral]
    if not kept:
        raise InsufficientData("no story has a moral vector")
    values = np.vstack([res.moral[s.id] for s in kept])
    cols = [f"moral_{i}" for i in range(values.shape[1])]
    return FeatureMatrix(values, [s.id for s in kept], cols), kept


def frame_feature_matrix(stories: Sequence[Story], frames: Mapping[str, FrameSeq], *,
                         top_k: int | None = None) -> tuple[FeatureMatrix, list[Story]]:
    """Unigram and bigram frame counts, optionally limited to the union of
    each tag's ``top_k`` most common frames."""
    kept = [s for s in stories if s.id in frames]
    if not kept:
        raise InsufficientData("no story has a frame sequence")
    vocab = None
    if top_k is not None:
        present = sorted({t for s in kept for t in s.tags}, key=lambda t: t.value)
        per_tag = top_k_frames_per_tag(kept, frames, top_k, present)
        vocab = sorted({f for labels in per_tag.values() for f in labels})
    feats = [frame_features(frames[s.id], vocab) for s in kept]
    columns = feature_vocabulary(feats)
    values = np.array([feature_row(fv, columns) for fv in feats], dtype=np.float64).reshape(len(kept), len(columns))
    names = [c if isinstance(c, str) else f"{c[0]}>{c[1]}" for c in columns]
    return FeatureMatrix(values, [s.id for s in kept], names), kept


# ---------------------------------------------------------------------------
# pair features

@dataclass(frozen=True)
class PairFeatures:
    lexical_cosine: float
    semantic_cosine: float
    frame_distance_ab: float
    frame_distance_ba: float
    shape_agreement: float
    lexical_overlap: float
    same_tag: float
    moral_cosine: float

    NAMES = ("lexical_cosine", "semantic_cosine", "frame_distance_ab", "frame_distance_ba",
             "shape_agreement", "lexical_overlap", "same_tag", "moral_cosine")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.NAMES], dtype=np.float64)


def _safe_cosine(table: Mapping[str, np.ndarray], a: str, b: str) -> float:
    if a not in table or b not in table:
        return 0.0
    try:
        return cosine(table[a], table[b])
    except ZeroVector:
        return 0.0


def _safe_frame_distance(res: Resources, ref: str, other: str) -> float:
    if ref not in res.frames or other not in res.frames or not res.frames[ref].frames:
        return 1.0
    return scaled_frame_distance(res.frames[ref], res.frames[other])


def pair_features(a: str, b: str, res: Resources) -> PairFeatures:
    """Features of one story pair; missing resources give neutral values
    (cosine 0, distance 1, indicator 0)."""
    sa, sb = res.story(a), res.story(b)
    agree = 0.0
    if a in res.profiles and b in res.profiles:
        agree = float(shape_agreement(res.profiles[a], res.profiles[b]))
    return PairFeatures(
        lexical_cosine=_safe_cosine(res.lexical, a, b),
        semantic_cosine=_safe_cosine(res.semantic, a, b),
        frame_distance_ab=_safe_frame_distance(res, a, b),
        frame_distance_ba=_safe_frame_distance(res, b, a),
        shape_agreement=agree,
        lexical_overlap=lexical_overlap(res.tokens[a], res.tokens[b]),
        same_tag=float(bool(sa.tags & sb.tags)),
        moral_cosine=_safe_cosine(res.moral, a, b),
    )


def pair_feature_matrix(pairs: Sequence[tuple[str, str]], res: Resources,
                        row_ids: Sequence[str] | None = None) -> FeatureMatrix:
    rows = [pair_features(a, b, res).as_vector() for a, b in pairs]
    values = np.vstack(rows) if rows else np.zeros((0, len(PairFeatures.NAMES)))
    ids = list(row_ids) if row_ids is not None else [f"{a}|{b}" for a, b in pairs]
    return FeatureMatrix(values, ids, list(PairFeatures.NAMES))


# ---------------------------------------------------------------------------
# task 3: analogy type prediction

@dataclass
class DimensionResult:
    dimension: AnalogyDimension
    positive_ratio: float
    status: str  # "ok" or "untrainable"
    accuracy: float | None = None
    f1: float | None = None
    f1_defined: bool = True
    train_size: int = 0
    test_size: int = 0
    model: LogisticModel | None = None
    scaler: Standardizer | None = None


def train_analogy_classifiers(
    annotations: Sequence[PairAnnotation],
    res: Resources,
    config: TrainConfig = TrainConfig(),
    *,
    dimensions: Sequence[AnalogyDimension] = DIMENSIONS,
    test_fraction: float = 0.2,
    min_pairs: int = 10,
) -> list[DimensionResult]:
    """One logistic classifier per analogy dimension over :class:`PairFeatures`."""
    if len(annotations) < min_pairs:
        raise InsufficientData(f"need at least {min_pairs} annotated pairs, got {len(annotations)}")
    X = pair_feature_matrix([(a.story_a, a.story_b) for a in annotations], res,
                            [a.pair_id for a in annotations]).values
    out = []
    for dim in dimensions:
        y = np.array([bool(a.labels.get(dim)) for a in annotations])
        ratio = float(y.mean())
        if y.all() or not y.any():
            out.append(DimensionResult(dim, ratio, "untrainable"))
            continue
        tr, te = stratified_split(y, rng_for(config.seed, "analogy-split", dim.value).integers(2**63), test_fraction)
        if len(set(y[tr])) < 2 or te.size == 0:
            out.append(DimensionResult(dim, ratio, "untrainable"))
            continue
        sc = Standardizer.fit(X[tr])
        model, _ = train_logistic(sc.transform(X[tr]), y[tr], config)
        counts = ConfusionCounts.from_labels(y[te], model.predict(sc.transform(X[te])))
        out.append(DimensionResult(dim, ratio, "ok", accuracy(counts), f1(counts), counts.f1_defined,
                                   int(tr.size), int(te.size), model, sc))
    return out


# ---------------------------------------------------------------------------
# task 4: transfer

@dataclass(frozen=True)
class LabeledPair:
    story_a: str
    story_b: str
    label: bool


def build_transfer_pairs(stories: Sequence[Story], target_size: int = 544, seed: int = 0) -> list[LabeledPair]:
    """Balanced same-tag / no-shared-tag pairs among the tagged stories.

    Positives share at least one tag; negatives share none. Each side is a
    seeded sample of ``min(target_size, available positives, available
    negatives)`` pairs, kept in enumeration order.
    """
    tagged = [s for s in stories if s.tags]
    if len(tagged) < 2:
        raise InsufficientData("need at least two tagged stories")
    positives, negatives = [], []
    for x, y in combinations(tagged, 2):
        (positives if x.tags & y.tags else negatives).append((x.id, y.id))
    n = min(target_size, len(positives), len(negatives))
    if len(positives) < target_size:
        warnings.warn(f"only {len(positives)} same-tag pairs available (wanted {target_size})",
                      InsufficientPairsWarning, stacklevel=2)
    if len(negatives) < min(target_size, len(positives)):
        warnings.warn(f"only {len(negatives)} no-shared-tag pairs available; output shrinks to {n} per side",
                      InsufficientPairsWarning, stacklevel=2)

    def pick(pool, label):
        rng = rng_for(seed, "transfer-pairs", label)
        idx = np.sort(rng.choice(len(pool), size=n, replace=False)) if n < len(pool) else np.arange(n)
        return [LabeledPair(*pool[i], label) for i in idx]

    return pick(positives, True) + pick(negatives, False)


def middle_window(text: str, words: int = 500) -> str:
    """The ``words``-token span centred on the middle token of ``text``."""
    if words < 1:
        raise ValueError("words must be >= 1")
    tokens = text.split()
    n = len(tokens)
    if n <= words:
        return " ".join(tokens)
    start = min(max(0, n // 2 - words // 2), n - words)
    return " ".join(tokens[start:start + words])


@dataclass
class TransferResult:
    model: LogisticModel
    scaler: Standardizer
    source_trace: EpochTrace
    dimension_traces: dict[AnalogyDimension, EpochTrace]
    train_size: int
    eval_size: int


def run_transfer(
    pairs: Sequence[LabeledPair],
    source: Resources,
    annotations: Sequence[PairAnnotation],
    target: Resources,
    config: TrainConfig = TrainConfig(),
    *,
    dimensions: Sequence[AnalogyDimension] = DIMENSIONS,
    test_fraction: float = 0.2,
) -> TransferResult:
    """Train a same-tag classifier on source pairs and score its positive
    predictions against each analogy dimension of the target annotations,
    once per epoch."""
    X = pair_feature_matrix([(p.story_a, p.story_b) for p in pairs], source).values
    y = np.array([p.label for p in pairs])
    if y.all() or not y.any():
        raise SingleClass("transfer pairs contain a single label")
    tr, te = stratified_split(y, rng_for(config.seed, "transfer-split").integers(2**63), test_fraction)
    sc = Standardizer.fit(X[tr])
    Xt = sc.transform(pair_feature_matrix([(a.story_a, a.story_b) for a in annotations], target).values)
    truth = {d: np.array([bool(a.labels.get(d)) for a in annotations]) for d in dimensions}
    dim_traces = {d: EpochTrace() for d in dimensions}

    def on_epoch(epoch: int, model: LogisticModel) -> None:
        pred = model.predict(Xt) if len(annotations) else np.zeros(0, dtype=bool)
        for d in dimensions:
            counts = ConfusionCounts.from_labels(truth[d], pred)
            acc = accuracy(counts) if counts.total else math.nan
            f1v = f1(counts) if counts.total else math.nan
            dim_traces[d].records.append(EpochRecord(epoch, math.nan, acc, f1v))

    model, trace = train_logistic(sc.transform(X[tr]), y[tr], config,
                                  eval=(sc.transform(X[te]), y[te]), callback=on_epoch)
    for d in dimensions:
        dim_traces[d].records = [EpochRecord(r.epoch, s.train_loss, r.eval_accuracy, r.eval_f1)
                                 for r, s in zip(dim_traces[d].records, trace.records)]
    return TransferResult(model, sc, trace, dim_traces, int(tr.size), int(te.size))
