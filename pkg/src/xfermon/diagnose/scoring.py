"""Precision / recall / F1 scoring over the nine-class label space."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from ..sim.anomaly import LABEL_CLASSES

LABEL_SPACE: tuple[str, ...] = tuple(c.value for c in LABEL_CLASSES)


@dataclass(frozen=True)
class ClassScore:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ScoreReport:
    per_class: dict[str, ClassScore]
    macro_f1: float
    macro_precision: float
    macro_recall: float
    confusion: dict[str, dict[str, int]]  # truth -> prediction -> count
    total: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_class": {
                    k: {
                        "precision": v.precision,
                        "recall": v.recall,
                        "f1": v.f1,
                        "support": v.support,
                    }
                    for k, v in self.per_class.items()
                },
                "macro_f1": self.macro_f1,
                "macro_precision": self.macro_precision,
                "macro_recall": self.macro_recall,
                "confusion": self.confusion,
                "total": self.total,
            },
            sort_keys=True,
        )

    def to_table(self) -> str:
        width = max(len(label) for label in self.per_class) + 2
        lines = [f"{'class':<{width}} {'prec':>7} {'recall':>7} {'f1':>7} {'support':>8}"]
        for label, cs in self.per_class.items():
            lines.append(
                f"{label:<{width}} {cs.precision:7.4f} {cs.recall:7.4f} "
                f"{cs.f1:7.4f} {cs.support:8d}"
            )
        lines.append(
            f"{'macro':<{width}} {self.macro_precision:7.4f} {self.macro_recall:7.4f} "
            f"{self.macro_f1:7.4f} {self.total:8d}"
        )
        return "\n".join(lines)


def score(predictions: Sequence[str], truths: Sequence[str]) -> ScoreReport:
    """Per-class precision/recall/F1 plus macro averages.

    Macro averages run over the classes with truth support; F1 is 0 where
    precision + recall is 0.
    """
    if len(predictions) != len(truths):
        raise ValueError(
            f"predictions ({len(predictions)}) and truths ({len(truths)}) differ in length"
        )
    labels = [l for l in LABEL_SPACE if l in set(truths) | set(predictions)]
    confusion: dict[str, dict[str, int]] = {t: {p: 0 for p in labels} for t in labels}
    for pred, truth in zip(predictions, truths):
        if truth not in confusion:
            raise ValueError(f"truth label {truth!r} outside the label space")
        if pred not in confusion[truth]:
            raise ValueError(f"predicted label {pred!r} outside the label space")
        confusion[truth][pred] += 1

    per_class: dict[str, ClassScore] = {}
    supported = []
    for label in labels:
        tp = confusion[label][label]
        fn = sum(confusion[label][p] for p in labels if p != label)
        fp = sum(confusion[t][label] for t in labels if t != label)
        support = tp + fn
        precision = tp / (tp + fp) if (tp + fp) else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        per_class[label] = ClassScore(label, precision, recall, f1, support)
        if support:
            supported.append(per_class[label])

    n = len(supported)
    return ScoreReport(
        per_class=per_class,
        macro_f1=sum(c.f1 for c in supported) / n if n else 0.0,
        macro_precision=sum(c.precision for c in supported) / n if n else 0.0,
        macro_recall=sum(c.recall for c in supported) / n if n else 0.0,
        confusion=confusion,
        total=len(truths),
    )
