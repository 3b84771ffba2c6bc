"""Accuracy, per-subset robustness, faithfulness deviation and representation dumps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import AbsaInstance, Polarity
from .model import AbsaModel

REPRESENTATIONS = ("r_f", "r_s", "r_adv")


@dataclass
class EvalReport:
    total: int
    correct: int
    confusion: np.ndarray                         # rows gold, columns predicted
    tags: dict = field(default_factory=dict)      # tag -> (correct, total)
    faithfulness: float | None = None             # mean deviation over instances with gold opinions
    faithfulness_count: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")

    def tag_accuracy(self, tag: str) -> float:
        c, n = self.tags[tag]
        return c / n

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "confusion": {"labels": [str(p) for p in Polarity], "counts": self.confusion.tolist()},
            "tags": {t: {"accuracy": c / n, "correct": c, "total": n} for t, (c, n) in sorted(self.tags.items())},
            "faithfulness_deviation": self.faithfulness,
            "faithfulness_count": self.faithfulness_count,
        }

    def to_text(self) -> str:
        lines = [f"{'subset':<12} {'correct':>8} {'total':>6} {'accuracy':>9}",
                 f"{'overall':<12} {self.correct:>8} {self.total:>6} {self.accuracy:>9.4f}"]
        for tag, (c, n) in sorted(self.tags.items()):
            lines.append(f"{tag:<12} {c:>8} {n:>6} {c / n:>9.4f}")
        lines.append("")
        names = [str(p) for p in Polarity]
        lines.append("gold \\ pred  " + " ".join(f"{n:>9}" for n in names))
        for p, row in zip(names, self.confusion):
            lines.append(f"{p:<12} " + " ".join(f"{int(v):>9}" for v in row))
        if self.faithfulness is not None:
            lines.append("")
            lines.append(f"faithfulness deviation {self.faithfulness:.4f} over {self.faithfulness_count} instances")
        return "\n".join(lines) + "\n"


def faithfulness_deviation(beta, gold_opinion) -> float | None:
    """1 minus the aggregation mass on the gold opinion tokens (1-based indices)."""
    if not gold_opinion:
        return None
    beta = np.asarray(beta, dtype=np.float64)
    mass = math.fsum(beta[i - 1] for i in sorted(gold_opinion))
    return min(1.0, max(0.0, 1.0 - mass))


def evaluate(model: AbsaModel, corpus: Sequence[AbsaInstance]) -> EvalReport:
    if not corpus:
        raise ValueError("cannot evaluate an empty corpus")
    confusion = np.zeros((len(Polarity), len(Polarity)), dtype=np.int64)
    tags: dict[str, list[int]] = {}
    deviations = []
    for inst in corpus:
        pred = model.predict(inst)
        guess = pred.label
        confusion[int(inst.label), int(guess)] += 1
        ok = int(guess == inst.label)
        for tag in inst.subset_tags:
            slot = tags.setdefault(tag, [0, 0])
            slot[0] += ok
            slot[1] += 1
        dev = faithfulness_deviation(pred.beta, inst.gold_opinion)
        if dev is not None:
            deviations.append(dev)
    return EvalReport(
        total=int(confusion.sum()),
        correct=int(np.trace(confusion)),
        confusion=confusion,
        tags={t: (c, n) for t, (c, n) in tags.items()},
        faithfulness=math.fsum(deviations) / len(deviations) if deviations else None,
        faithfulness_count=len(deviations),
    )


def write_report(report: EvalReport, directory, stem: str = "report") -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    text = directory / f"{stem}.txt"
    record = directory / f"{stem}.json"
    text.write_text(report.to_text(), encoding="utf-8")
    record.write_text(json.dumps(report.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
    return text, record


def dump_representations(model: AbsaModel, corpus: Sequence[AbsaInstance], which: str, path) -> Path:
    """TSV with id, gold, predicted and one column per vector component."""
    if which not in REPRESENTATIONS:
        raise ValueError(f"representation must be one of {REPRESENTATIONS}")
    c = model.config
    width = {"r_f": c.d_final, "r_s": c.d_final - c.d_model,
             "r_adv": c.d_model + 2 * (c.d_final - c.d_model)}[which]
    header = ["id", "gold", "predicted"] + [f"{which}_{k}" for k in range(width)]
    rows = ["\t".join(header)]
    for inst in corpus:
        pred = model.predict(inst)
        vec = getattr(pred, which)
        rows.append("\t".join([inst.id, str(inst.label), str(pred.label)] + [repr(float(v)) for v in vec]))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path
