"""Synthetic corpus construction: sentiment modification, background rewriting, aspect addition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..corpus import AbsaInstance
from ..lexicon import Lexicons
from .addition import (AspectUnit, MeanVectorEmbedder, build_aspect_units, gen_aspect_addition,
                       load_word_vectors)
from .background import (IdentityParaphraser, ParaphraseError, Paraphraser, RewriteStats,
                         StubParaphraser, rewrite_background)
from .opinions import OpinionLink, locate_opinions
from .samples import (SampleKind, SyntheticSample, canonical_order, dump_samples, export_sentences,
                      import_parses, load_samples)
from .scores import (ConfidenceError, addition_confidence, aspect_similarity, meteor,
                     modification_confidence)
from .sentiment_mod import gen_sentiment_mod

__all__ = [
    "AspectUnit", "AugmentConfig", "AugmentResult", "ConfidenceError", "IdentityParaphraser",
    "MeanVectorEmbedder", "OpinionLink", "ParaphraseError", "Paraphraser", "SampleKind",
    "StubParaphraser", "SyntheticSample", "addition_confidence", "aspect_similarity",
    "build_aspect_units", "build_synthetic", "canonical_order", "dump_samples", "export_sentences",
    "gen_aspect_addition", "gen_sentiment_mod", "import_parses", "load_samples", "load_word_vectors",
    "locate_opinions", "meteor", "modification_confidence", "rewrite_background",
]


@dataclass
class AugmentConfig:
    theta_a: float = 0.2
    theta_n: float = 0.25
    theta_m: float = 0.85
    J: int = 1
    per_target: int = 2
    surface_edits: tuple = ("tense", "pronoun", "quantifier", "punctuation")


@dataclass
class AugmentResult:
    samples: dict = field(default_factory=dict)   # SampleKind -> list of SyntheticSample
    rewrite_stats: RewriteStats = field(default_factory=RewriteStats)
    units: list = field(default_factory=list)

    def all(self) -> list[SyntheticSample]:
        return canonical_order(s for group in self.samples.values() for s in group)

    def summary(self) -> dict:
        out = {}
        for kind in SampleKind:
            group = self.samples.get(kind, [])
            confs = [s.confidence for s in group]
            out[kind.value] = {
                "count": len(group),
                "sources": len({s.source_id for s in group}),
                "min_confidence": min(confs) if confs else None,
                "max_confidence": max(confs) if confs else None,
                "needs_reparse": sum(s.needs_reparse for s in group),
            }
        out["paraphrase_failures"] = self.rewrite_stats.paraphrase_failures
        out["paraphrase_rejected"] = self.rewrite_stats.paraphrase_rejected
        out["aspect_units"] = len(self.units)
        return out


def build_synthetic(corpus: Sequence[AbsaInstance], lexicons: Lexicons,
                    embedder: Callable, config: AugmentConfig | None = None,
                    paraphraser: Paraphraser | None = None) -> AugmentResult:
    """Run the three generators over `corpus`; outputs are in canonical order."""
    config = config or AugmentConfig()
    result = AugmentResult()
    da, dn, dm = [], [], []
    for inst in corpus:
        da.extend(gen_sentiment_mod(inst, lexicons.sentiment, lexicons.relations,
                                    lexicons.negations, config.theta_a))
        dn.extend(rewrite_background(inst, lexicons.sentiment, lexicons.relations, config.theta_n,
                                     paraphraser, config.surface_edits, result.rewrite_stats))
    result.units = build_aspect_units(corpus, embedder)
    for inst in corpus:
        dm.extend(gen_aspect_addition(inst, result.units, config.J, config.theta_m, config.per_target))
    result.samples = {
        SampleKind.SENTIMENT_MOD: canonical_order(da),
        SampleKind.BACKGROUND_REWRITE: canonical_order(dn),
        SampleKind.ASPECT_ADDITION: canonical_order(dm),
    }
    return result
