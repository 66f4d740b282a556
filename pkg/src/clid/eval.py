"""Confusion matrices, accuracy, F1, multiclass MCC and report rendering."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from clid.corpus import LANGUAGES, Language
from clid.errors import ConfigError, DataError


def confusion_matrix(y_true, y_pred, n_classes: int = 4) -> np.ndarray:
    """Rows are true labels, columns predicted labels."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape:
        raise DataError(f"length mismatch: {t.size} true labels vs {p.size} predictions")
    if t.size == 0:
        raise DataError("confusion matrix needs at least one sample")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def accuracy(cm) -> float:
    cm = np.asarray(cm)
    return float(np.trace(cm) / cm.sum())


def per_class_f1(cm) -> np.ndarray:
    """F1 per class; 0 where precision + recall is 0."""
    cm = np.asarray(cm, dtype=float)
    tp = np.diag(cm)
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    precision = np.divide(tp, col, out=np.zeros_like(tp), where=col > 0)
    recall = np.divide(tp, row, out=np.zeros_like(tp), where=row > 0)
    denom = precision + recall
    return np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(cm) -> float:
    return float(per_class_f1(cm).mean())


def mcc(cm) -> float:
    """Multiclass Matthews correlation (Gorodkin's R_K); 0 when undefined."""
    cm = np.asarray(cm, dtype=float)
    s = cm.sum()
    c = np.trace(cm)
    t = cm.sum(axis=1)
    p = cm.sum(axis=0)
    denom = (s * s - p @ p) * (s * s - t @ t)
    if denom <= 0:
        return 0.0
    return float((c * s - p @ t) / math.sqrt(denom))


def pct(x: float) -> str:
    return f"{Decimal(repr(100 * x)).quantize(Decimal('1'), rounding=ROUND_HALF_UP)}%"


@dataclass(frozen=True)
class EvalReport:
    cm: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return accuracy(self.cm)

    @property
    def per_class_f1(self) -> dict[Language, float]:
        return dict(zip(LANGUAGES, per_class_f1(self.cm).tolist()))

    @property
    def macro_f1(self) -> float:
        return macro_f1(self.cm)

    @property
    def mcc(self) -> float:
        return mcc(self.cm)

    def to_dict(self) -> dict:
        meta = {k: self.meta.get(k) for k in ("model", "features", "label_fraction", "seed")}
        meta.update({k: v for k, v in self.meta.items() if k not in meta})
        return {
            "meta": meta,
            "metrics": {
                "accuracy": self.accuracy,
                "macro_f1": self.macro_f1,
                "mcc": self.mcc,
                "f1": {lang.key: v for lang, v in self.per_class_f1.items()},
            },
            "confusion": self.cm.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(np.array(d["confusion"], dtype=np.int64), dict(d["meta"]))


def evaluate(y_true, y_pred, **meta) -> EvalReport:
    return EvalReport(confusion_matrix(y_true, y_pred), meta)


CSV_FIELDS = (
    "model", "features", "label_fraction", "seed",
    "accuracy", "macro_f1", "mcc", "f1_welsh", "f1_english", "f1_irish", "f1_scottish",
)
TABLE_HEAD = ("Feature", "Accuracy", "MCC", "Mean F1", "F1 (Irish)", "F1 (Scottish)")


def _table(reports: Sequence[EvalReport]) -> str:
    rows = [TABLE_HEAD]
    for r in reports:
        f1 = r.per_class_f1
        label = str(r.meta.get("features", ""))
        if r.meta.get("model"):
            label = f"{r.meta['model']}:{label}"
        if r.meta.get("label_fraction") not in (None, 1, 1.0):
            label += f" ({pct(r.meta['label_fraction'])})"
        rows.append(
            (label, pct(r.accuracy), pct(r.mcc), pct(r.macro_f1), pct(f1[Language.IRISH]), pct(f1[Language.SCOTTISH]))
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(TABLE_HEAD))]
    lines = ["  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(row, widths))) for row in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def _csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        f1 = r.per_class_f1
        w.writerow([
            r.meta.get("model"), r.meta.get("features"), r.meta.get("label_fraction"), r.meta.get("seed"),
            repr(r.accuracy), repr(r.macro_f1), repr(r.mcc),
            *(repr(f1[lang]) for lang in LANGUAGES),
        ])
    return buf.getvalue()


def render_report(report: EvalReport | Sequence[EvalReport], format: str = "table") -> str:
    reports = [report] if isinstance(report, EvalReport) else list(report)
    if format == "table":
        return _table(reports)
    if format == "json":
        body = reports[0].to_dict() if isinstance(report, EvalReport) else [r.to_dict() for r in reports]
        return json.dumps(body, indent=2)
    if format == "csv":
        return _csv(reports)
    raise ConfigError(f"unknown report format {format!r}")


def render_confusion(reports: Sequence[EvalReport]) -> str:
    """Side-by-side confusion matrices (rows true, columns predicted)."""
    short = [lang.name[0] for lang in LANGUAGES]
    blocks = []
    for r in reports:
        title = f"{r.meta.get('model', '')}:{r.meta.get('features', '')} ({pct(r.meta.get('label_fraction', 1.0))})"
        width = max(len(str(v)) for v in r.cm.flat)
        width = max(width, 1)
        lines = [title, "      " + " ".join(s.rjust(width) for s in short)]
        for lang, row in zip(LANGUAGES, r.cm):
            lines.append(f"{lang.name[:5].capitalize():<5} " + " ".join(str(v).rjust(width) for v in row))
        blocks.append(lines)
    height = max(len(b) for b in blocks) if blocks else 0
    widths = [max(len(line) for line in b) for b in blocks]
    out = []
    for i in range(height):
        out.append(" | ".join((b[i] if i < len(b) else "").ljust(w) for b, w in zip(blocks, widths)).rstrip())
    return "\n".join(out)
