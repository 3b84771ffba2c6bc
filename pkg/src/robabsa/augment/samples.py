"""Synthetic sample type and its on-disk format."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from ..corpus import (AbsaInstance, AspectSpan, CorpusError, DepTree, Polarity,
                      dump_conllu, instance_record, load_conllu, parse_instance_record)


class SampleKind(enum.Enum):
    SENTIMENT_MOD = "SentimentMod"
    BACKGROUND_REWRITE = "BackgroundRewrite"
    ASPECT_ADDITION = "AspectAddition"

    @property
    def short(self) -> str:
        return {"SentimentMod": "a", "BackgroundRewrite": "n", "AspectAddition": "m"}[self.value]

    @property
    def type_id(self) -> int:
        return list(SampleKind).index(self)


@dataclass(frozen=True)
class SyntheticSample:
    id: str
    source_id: str
    kind: SampleKind
    tree: DepTree
    aspect: AspectSpan
    label: Polarity
    confidence: float
    needs_reparse: bool = False
    rank: int = 0
    flipped: bool = False
    strategy: str = ""
    unit_scores: tuple = ()
    unit_ids: tuple = ()
    gold_opinion: frozenset | None = None

    def __post_init__(self):
        self.aspect.check(len(self.tree))

    def as_instance(self) -> AbsaInstance:
        return AbsaInstance(self.id, self.tree, self.aspect, self.label,
                            frozenset({self.kind.value}), self.gold_opinion)

    @property
    def aspect_forms(self) -> list[str]:
        return [self.tree.tokens[i - 1].form for i in self.aspect.indices()]

    def sort_key(self):
        return (self.source_id, self.kind.type_id, self.rank)


def canonical_order(samples: Iterable[SyntheticSample]) -> list[SyntheticSample]:
    return sorted(samples, key=SyntheticSample.sort_key)


def sample_record(s: SyntheticSample, sent: int) -> dict:
    rec = instance_record(s.as_instance(), sent)
    rec.pop("tags", None)
    rec.update({
        "kind": s.kind.value,
        "source_id": s.source_id,
        "confidence": s.confidence,
        "needs_reparse": s.needs_reparse,
        "rank": s.rank,
    })
    if s.kind is SampleKind.SENTIMENT_MOD:
        rec["flipped"] = s.flipped
    if s.strategy:
        rec["strategy"] = s.strategy
    if s.unit_scores:
        rec["unit_scores"] = list(s.unit_scores)
        rec["unit_ids"] = list(s.unit_ids)
    return rec


def dump_samples(samples: Sequence[SyntheticSample], records_path, conllu_path) -> None:
    lines = [json.dumps(sample_record(s, i), sort_keys=True) for i, s in enumerate(samples)]
    dump_conllu([s.tree for s in samples], conllu_path)
    Path(records_path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")


def load_samples(records_path, conllu_path) -> list[SyntheticSample]:
    trees = load_conllu(conllu_path)
    out = []
    with open(records_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{records_path}:{lineno}"
            rec = json.loads(line)
            inst = parse_instance_record(rec, trees, where)
            try:
                kind = SampleKind(rec["kind"])
            except (KeyError, ValueError):
                raise CorpusError(f"{where}: bad or missing kind") from None
            out.append(SyntheticSample(
                id=inst.id,
                source_id=str(rec["source_id"]),
                kind=kind,
                tree=inst.tree,
                aspect=inst.aspect,
                label=inst.label,
                confidence=float(rec["confidence"]),
                needs_reparse=bool(rec.get("needs_reparse", False)),
                rank=int(rec.get("rank", 0)),
                flipped=bool(rec.get("flipped", False)),
                strategy=rec.get("strategy", ""),
                unit_scores=tuple(float(x) for x in rec.get("unit_scores", ())),
                unit_ids=tuple(rec.get("unit_ids", ())),
                gold_opinion=inst.gold_opinion,
            ))
    return out


def export_sentences(samples: Sequence[SyntheticSample]) -> list[str]:
    """Plain-text lines (one per sample awaiting a parse), in sample order."""
    return [s.tree.text() for s in samples if s.needs_reparse]


def import_parses(samples: Sequence[SyntheticSample], trees: Sequence[DepTree]) -> list[SyntheticSample]:
    """Attach external parses to the samples flagged for reparsing.

    The i-th tree belongs to the i-th flagged sample.  The aspect span is
    re-located by its token forms when the parser's tokenisation moved it.
    """
    pending = [i for i, s in enumerate(samples) if s.needs_reparse]
    if len(pending) != len(trees):
        raise CorpusError(f"{len(trees)} parses for {len(pending)} sentences awaiting reparse")
    out = list(samples)
    for i, tree in zip(pending, trees):
        s = samples[i]
        span = _find_span(tree.forms, s.aspect_forms, s.aspect.start)
        if span is None:
            raise CorpusError(f"{s.id}: aspect {' '.join(s.aspect_forms)!r} not found in returned parse")
        out[i] = replace(s, tree=tree, aspect=span, needs_reparse=False, gold_opinion=None)
    return out


def _find_span(forms, target, hint) -> AspectSpan | None:
    k = len(target)
    hits = [i for i in range(len(forms) - k + 1) if forms[i:i + k] == list(target)]
    if not hits:
        return None
    best = min(hits, key=lambda i: abs(i + 1 - hint))
    return AspectSpan(best + 1, best + 1 + k)
