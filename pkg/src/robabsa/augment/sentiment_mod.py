"""Sentiment modification: keep or flip the target aspect's polarity by editing its opinion words."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from ..corpus import AbsaInstance, Polarity
from ..lexicon import DEFAULT_NEGATIONS, RelationLexicon, SentimentLexicon, candidates_for
from .edits import insert_tokens, shift_indices, shift_span
from .opinions import OpinionLink, locate_opinions
from .samples import SampleKind, SyntheticSample
from .scores import ConfidenceError, modification_confidence

# relations where only negation can change the sentiment
NEGATION_ONLY = ("dobj", "xcomp")


@dataclass(frozen=True)
class _Option:
    target: Polarity
    flipped: bool
    confidence: float
    position: int          # opinion head index in the source tree
    replacement: str | None = None   # substitute form, or
    negation: str | None = None      # word inserted before the opinion
    insert_at: int = 0


def _flip_target(scores, source: Polarity) -> Polarity:
    return max((p for p in Polarity if p != source), key=lambda p: (scores[p], -p.value))


def negated_scores(entry, negation_entry):
    """Polarity scores of the phrase "<negation> <word>".

    Negation swaps positive and negative strength.  A neutral-dominant word
    has nothing to swap, so the phrase takes the negation word's own scores.
    """
    if entry.dominant() is Polarity.NEUTRAL and negation_entry is not None:
        return dict(negation_entry.scores)
    return {
        Polarity.POSITIVE: entry[Polarity.NEGATIVE],
        Polarity.NEGATIVE: entry[Polarity.POSITIVE],
        Polarity.NEUTRAL: entry[Polarity.NEUTRAL],
    }


def _negation_slot(inst: AbsaInstance, head: int) -> int:
    cops = [a.dependent for a in inst.tree.children(head) if a.label == "cop" and a.dependent < head]
    return max(cops) + 1 if cops else head


def _link_options(inst, link: OpinionLink, sent_lex, rel_lex, negations) -> list[_Option]:
    head = link.head
    tok = inst.tree.tokens[head - 1]
    src = sent_lex.lookup(tok.form, tok.upos)
    if src is None:
        return []
    src_score = src[inst.label]
    options = []

    def scored(word):
        entry = sent_lex.lookup(word, tok.upos)
        # candidates must keep the opinion's part of speech
        if entry is None or entry.upos != tok.upos:
            return None
        return entry

    for syn in candidates_for(tok.form, tok.upos, "synonym", rel_lex):
        entry = scored(syn)
        if entry is None:
            continue
        try:
            conf = modification_confidence(src_score, entry.scores, inst.label)
        except ConfidenceError:
            continue
        options.append(_Option(inst.label, False, conf, head, replacement=syn))

    negation_only = inst.label is Polarity.NEUTRAL or link.relation in NEGATION_ONLY
    antonyms = [] if negation_only else candidates_for(tok.form, tok.upos, "antonym", rel_lex)
    flips = []
    for ant in antonyms:
        entry = scored(ant)
        if entry is None:
            continue
        target = _flip_target(entry.scores, inst.label)
        try:
            conf = modification_confidence(src_score, entry.scores, target)
        except ConfidenceError:
            continue
        flips.append(_Option(target, True, conf, head, replacement=ant))
    if not flips and negations:
        neg = negations[0]
        scores = negated_scores(src, sent_lex.lookup(neg))
        target = _flip_target(scores, inst.label)
        try:
            conf = modification_confidence(src_score, scores, target)
            flips.append(_Option(target, True, conf, head, negation=neg,
                                 insert_at=_negation_slot(inst, head)))
        except ConfidenceError:
            pass
    return options + flips


def _apply(inst: AbsaInstance, combo: Sequence[_Option]):
    forms = inst.tree.forms
    for opt in combo:
        if opt.replacement is not None:
            original = forms[opt.position - 1]
            forms[opt.position - 1] = opt.replacement.capitalize() if original[:1].isupper() else opt.replacement
    tree = inst.tree.with_forms(forms)
    span, gold = inst.aspect, inst.gold_opinion
    # insert right-to-left so earlier slots keep their indices
    for opt in sorted((o for o in combo if o.negation), key=lambda o: -o.insert_at):
        head = opt.position + (1 if opt.position >= opt.insert_at else 0)
        tree = insert_tokens(tree, opt.insert_at, [(opt.negation, "PART", head, "neg")])
        span = shift_span(span, opt.insert_at, 1)
        gold = shift_indices(gold, opt.insert_at, 1)
    return tree, span, gold


def gen_sentiment_mod(inst: AbsaInstance, sent_lex: SentimentLexicon, rel_lex: RelationLexicon,
                      negations: Sequence[str] = DEFAULT_NEGATIONS,
                      threshold: float = 0.2) -> list[SyntheticSample]:
    """Same-polarity and flipped variants of `inst`, gated by modification confidence.

    With several opinion links, every link is edited at once and all edits
    must agree on the target label; the combination's confidence is the
    weakest link's.
    """
    per_link = [o for o in (_link_options(inst, l, sent_lex, rel_lex, negations)
                            for l in locate_opinions(inst)) if o]
    if not per_link:
        return []
    out: list[SyntheticSample] = []
    seen = set()
    rank = 0
    for combo in itertools.product(*per_link):
        target, flipped = combo[0].target, combo[0].flipped
        if any(o.target != target or o.flipped != flipped for o in combo):
            continue
        conf = min(o.confidence for o in combo)
        if not conf >= threshold:
            continue
        tree, span, gold = _apply(inst, combo)
        text = tree.text()
        if text in seen:
            continue
        seen.add(text)
        out.append(SyntheticSample(
            id=f"{inst.id}#a{rank}",
            source_id=inst.id,
            kind=SampleKind.SENTIMENT_MOD,
            tree=tree,
            aspect=span,
            label=target,
            confidence=conf,
            rank=rank,
            flipped=flipped,
            strategy="negation" if any(o.negation for o in combo) else ("antonym" if flipped else "synonym"),
            gold_opinion=gold,
        ))
        rank += 1
    return out
