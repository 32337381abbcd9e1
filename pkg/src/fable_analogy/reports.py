"""Table writers (comma-separated or JSON records) and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .corpus import AnalogyDimension, MoralTag
from .learn import DimensionResult, OneVsAllReport
from .metrics import CorrelationMatrix, IAATable
from .pairing import MethodReport, PairingMethod

UNDEFINED = "undefined"

# column labels, in report order
METHOD_LABELS = {
    PairingMethod.SEMANTIC: "Semantic",
    PairingMethod.FRAME: "Frames",
    PairingMethod.LEXICAL: "Lexical",
    PairingMethod.RANDOM: "Random",
    PairingMethod.SHAPE: "Shape",
}
SSS_LABEL = "SSS (interpreted as story-shape agreement)"


def fmt(value, digits: int = 4) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return UNDEFINED
        return f"{value:.{digits}f}"
    return str(value)


def _json_value(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class TableWriter:
    """Writes one table as ``<name>.csv`` or ``<name>.jsonl`` under ``out``."""

    def __init__(self, out: Path, fmt: str = "csv"):
        if fmt not in ("csv", "records"):
            raise ValueError(f"unknown format {fmt!r}")
        self.out = Path(out)
        self.format = fmt
        self.written: list[Path] = []

    def write(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        rows = [list(r) for r in rows]
        if self.format == "csv":
            path = self.out / f"{name}.csv"
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
            path.write_text(buf.getvalue(), encoding="utf-8")
        else:
            path = self.out / f"{name}.jsonl"
            with path.open("w", encoding="utf-8") as fh:
                for r in rows:
                    rec = {h: _json_value(v) for h, v in zip(header, r)}
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        self.written.append(path)
        return path

    def write_text(self, relpath: str, text: str) -> Path:
        path = self.out / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.written.append(path)
        return path


def plot_data(rows: Iterable[tuple], header: tuple[str, str]) -> str:
    """Two-column comma-separated plot data with full float precision."""
    lines = [",".join(header)]
    for x, y in rows:
        lines.append(f"{x},{repr(float(y)) if isinstance(y, float) else y}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# table builders

def moral_table(counts: Mapping[MoralTag, int]) -> tuple[list[str], list[list]]:
    return ["tag", "count"], [[t.value, counts[t]] for t in MoralTag]


def method_table(report: MethodReport) -> tuple[list[str], list[list]]:
    """One column per method plus a 'maximum' column."""
    methods = sorted(report.scores, key=lambda s: list(METHOD_LABELS).index(s.method))
    header = ["row", "maximum"] + [METHOD_LABELS[s.method] for s in methods]
    rows = [["Story count", report.total_annotated] + [s.count for s in methods],
            ["Method average", len(report.dimensions)] + [s.average for s in methods]]
    for d in report.dimensions:
        rows.append([d.value, 1] + [s.rates[d] for s in methods])
    rows.append([SSS_LABEL, 1] + [s.shape_agreement for s in methods])
    return header, rows


def cluster_table(report: OneVsAllReport) -> tuple[list[str], list[list]]:
    header = ["tag", "positives", "negatives", "accuracy", "f1", "repeats", "status"]
    by_tag = {r.tag: r for r in report.results}
    rows = []
    for tag in MoralTag:
        if tag in by_tag:
            r = by_tag[tag]
            rows.append([tag.value, r.positives, r.negatives, r.accuracy, r.f1, r.repeats, "ok"])
        elif tag in report.skipped:
            rows.append([tag.value, None, None, None, None, 0, report.skipped[tag]])
    return header, rows


def analogy_table(results: Sequence[DimensionResult]) -> tuple[list[str], list[list]]:
    header = ["analogy", "positive_class_ratio", "accuracy", "f1", "train", "test", "status"]
    rows = []
    for r in results:
        status = r.status if r.f1_defined else f"{r.status}; f1 undefined (no positives in test split)"
        rows.append([r.dimension.value, r.positive_ratio, r.accuracy, r.f1,
                     r.train_size or None, r.test_size or None, status])
    return header, rows


def iaa_table(table: IAATable) -> tuple[list[str], list[list]]:
    header = ["annotators"] + [d.value for d in table.dimensions]
    rows = [[f"{a} VS {b}"] + list(vals) for a, b, vals in table.rows]
    return header, rows


def correlation_table(cm: CorrelationMatrix) -> tuple[list[str], list[list]]:
    header = ["dim_a", "dim_b", "value", "status"]
    rows = []
    for i, a in enumerate(cm.dims):
        for j, b in enumerate(cm.dims):
            v = float(cm.values[i, j])
            defined = not math.isnan(v)
            rows.append([a.value, b.value, v if defined else None, "defined" if defined else UNDEFINED])
    return header, rows


# ---------------------------------------------------------------------------
# manifest

def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, command: str, config: Mapping, inputs: Mapping[str, str | None],
                   outputs: Sequence[Path]) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": dict(config),
        "inputs": {k: {"path": str(v), "sha256": file_digest(v)} for k, v in inputs.items() if v},
        "outputs": sorted(str(p.relative_to(out)) for p in outputs),
    }
    path = out / f"manifest_{command.replace(' ', '_')}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def dimension_list(names: str | None) -> tuple[AnalogyDimension, ...]:
    if not names:
        return tuple(AnalogyDimension)
    return tuple(AnalogyDimension.parse(n) for n in names.split(","))
