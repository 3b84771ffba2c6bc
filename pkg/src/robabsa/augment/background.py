"""Background rewriting: change the opinion-less context around the target aspect."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from ..corpus import AbsaInstance, AspectSpan, Polarity
from ..lexicon import RelationLexicon, SentimentLexicon, candidates_for
from .edits import flat_tree
from .opinions import opinion_indices
from .samples import SampleKind, SyntheticSample
from .scores import meteor

log = logging.getLogger(__name__)

SURFACE_EDITS = ("tense", "pronoun", "quantifier", "punctuation")
PLACEHOLDER = "ASPECTTERM"

# present <-> past pairs; keyed both ways
_TENSE_PAIRS = [
    ("is", "was"), ("are", "were"), ("am", "was"), ("has", "had"), ("have", "had"),
    ("does", "did"), ("do", "did"), ("tastes", "tasted"), ("looks", "looked"),
    ("seems", "seemed"), ("enjoy", "enjoyed"), ("visit", "visited"), ("go", "went"),
    ("come", "came"), ("say", "said"), ("says", "said"), ("think", "thought"),
    ("order", "ordered"), ("eat", "ate"), ("get", "got"), ("find", "found"),
]
TENSE_TABLE: dict[str, str] = {}
for _present, _past in _TENSE_PAIRS:
    TENSE_TABLE.setdefault(_present, _past)
    TENSE_TABLE.setdefault(_past, _present)

PRONOUN_SWAP = {"he": "she", "she": "he"}
QUANTIFIERS = {"some": "several", "several": "some", "many": "numerous", "numerous": "many",
               "few": "several", "all": "every", "every": "all"}
PUNCT_SWAP = {".": "!", "!": "."}


class ParaphraseError(RuntimeError):
    pass


class Paraphraser(Protocol):
    def __call__(self, sentence: str) -> str: ...


class IdentityParaphraser:
    def __call__(self, sentence: str) -> str:
        return sentence


class StubParaphraser:
    """Offline stand-in for back-translation.

    Cycles through relation-lexicon synonyms of content words and swaps the two
    halves of a sentence joined by ", and".  Deterministic.
    """

    def __init__(self, relations: RelationLexicon):
        self.synonyms: dict[str, list[str]] = {}
        for (word, _upos), slot in sorted(relations.entries.items()):
            if slot["synonym"]:
                self.synonyms.setdefault(word, []).extend(slot["synonym"])

    def __call__(self, sentence: str) -> str:
        toks = sentence.split()
        out, k = [], 0
        for t in toks:
            syns = self.synonyms.get(t.lower())
            if syns and t != PLACEHOLDER:
                out.append(syns[k % len(syns)])
                k += 1
            else:
                out.append(t)
        final = [out.pop()] if out and out[-1] in ".!?" else []
        for i in range(1, len(out) - 1):
            if out[i] == "," and out[i + 1] == "and":
                left, right = out[:i], out[i + 2:]
                if left and right:
                    out = right + [",", "and"] + left
                break
        return " ".join(out + final)


@dataclass
class RewriteStats:
    paraphrase_failures: int = 0
    paraphrase_rejected: int = 0     # replacement opinion refused, original spliced back
    counts: dict = field(default_factory=dict)


def _capital_like(original: str, new: str) -> str:
    return new.capitalize() if original[:1].isupper() and new[:1].islower() else new


def surface_edit(forms, upos, protected, edit: str) -> list[str] | None:
    out = list(forms)
    changed = False
    if edit == "tense":
        for i, (f, u) in enumerate(zip(forms, upos)):
            if i in protected or u not in ("VERB", "AUX"):
                continue
            new = TENSE_TABLE.get(f.lower())
            if new:
                out[i] = _capital_like(f, new)
                changed = True
    elif edit == "pronoun":
        pronouns = [i for i, u in enumerate(upos) if u == "PRON"]
        if len(pronouns) <= 1:
            for i in pronouns:
                new = PRONOUN_SWAP.get(forms[i].lower())
                if new and i not in protected:
                    out[i] = _capital_like(forms[i], new)
                    changed = True
    elif edit == "quantifier":
        for i, f in enumerate(forms):
            new = QUANTIFIERS.get(f.lower())
            if new and i not in protected:
                out[i] = _capital_like(f, new)
                changed = True
    elif edit == "punctuation":
        i = len(forms) - 1
        if i not in protected and forms[i] in PUNCT_SWAP:
            out[i] = PUNCT_SWAP[forms[i]]
            changed = True
    else:
        raise ValueError(f"unknown surface edit {edit!r}")
    return out if changed else None


def neutral_substitution(inst, sent_lex, rel_lex, protected, relation: str) -> list[str] | None:
    """Swap every neutral-dominant context word for its first same-POS synonym/antonym."""
    forms = inst.tree.forms
    out = list(forms)
    changed = False
    for i, tok in enumerate(inst.tree.tokens):
        if i in protected:
            continue
        entry = sent_lex.lookup(tok.form, tok.upos)
        if entry is None or entry.dominant() is not Polarity.NEUTRAL:
            continue
        for cand in candidates_for(tok.form, tok.upos, relation, rel_lex):
            c_entry = sent_lex.lookup(cand, tok.upos)
            if c_entry is not None and c_entry.upos != tok.upos:
                continue
            out[i] = _capital_like(tok.form, cand)
            changed = True
            break
    return out if changed else None


def polarity_agreement(a, b) -> float:
    """Overlap of the two normalised polarity distributions, in [0, 1]."""
    sa = sum(a.scores.values())
    sb = sum(b.scores.values())
    if sa == 0 or sb == 0:
        return 0.0
    return sum(min(a.scores[p] / sa, b.scores[p] / sb) for p in Polarity)


def paraphrase_rewrite(inst, paraphraser: Callable[[str], str], sent_lex, opinion: set[int]):
    """Paraphrase with the aspect pinned; returns (forms, aspect_start, outcome)."""
    forms = inst.tree.forms
    span = inst.aspect
    masked = forms[:span.start - 1] + [PLACEHOLDER] + forms[span.end - 1:]
    try:
        result = paraphraser(" ".join(masked))
    except Exception as exc:  # any backend failure skips this strategy
        raise ParaphraseError(str(exc)) from exc
    out = result.split()
    if out.count(PLACEHOLDER) != 1:
        raise ParaphraseError("aspect term not preserved")

    op_idx = sorted(opinion)
    op_forms = [forms[i - 1] for i in op_idx]
    lowered = [t.lower() for t in out]
    survivors = [f for f in op_forms if f.lower() in lowered]
    outcome = "kept"
    original = {f.lower() for f in forms}
    if op_forms and len(survivors) < len(op_forms):
        if survivors:
            # partial change: the lost opinion words go back into the slots the
            # paraphraser filled with new words, or next to the first survivor
            missing = [f for f in op_forms if f.lower() not in lowered]
            fresh = [j for j, t in enumerate(out) if t != PLACEHOLDER and t.lower() not in original]
            if len(fresh) >= len(missing):
                for j, f in zip(fresh, missing):
                    out[j] = f
            else:
                pos = min(lowered.index(f.lower()) for f in survivors)
                drop = {lowered.index(f.lower()) for f in survivors}
                keep = [t for j, t in enumerate(out) if j not in drop]
                out = keep[:pos] + op_forms + keep[pos:]
            outcome = "spliced"
        else:
            src_entry = None
            for i in op_idx:
                tok = inst.tree.tokens[i - 1]
                src_entry = sent_lex.lookup(tok.form, tok.upos)
                if src_entry is not None:
                    break
            best, best_pos = 0.0, None
            for j, t in enumerate(out):
                if t == PLACEHOLDER or t.lower() in original:
                    continue
                entry = sent_lex.lookup(t)
                if entry is None or src_entry is None:
                    continue
                agree = polarity_agreement(entry, src_entry)
                if agree > best:
                    best, best_pos = agree, j
            if best_pos is not None and best > 0.5:
                out = out[:best_pos] + op_forms + out[best_pos + 1:]
                outcome = "replaced"
            else:
                # the new wording disagrees with the original opinion: put the original back
                pos = min(op_idx[0] - 1, len(out))
                out = out[:pos] + op_forms + out[pos:]
                outcome = "restored"
    k = out.index(PLACEHOLDER)
    aspect = inst.aspect_forms
    new_forms = out[:k] + aspect + out[k + 1:]
    return new_forms, k + 1, outcome


def rewrite_background(inst: AbsaInstance, sent_lex: SentimentLexicon, rel_lex: RelationLexicon,
                       threshold: float = 0.25, paraphraser: Paraphraser | None = None,
                       surface_edits: Sequence[str] = SURFACE_EDITS,
                       stats: RewriteStats | None = None) -> list[SyntheticSample]:
    stats = stats if stats is not None else RewriteStats()
    tree = inst.tree
    forms = tree.forms
    upos = [t.upos for t in tree.tokens]
    opinion = opinion_indices(inst)
    protected = {i - 1 for i in opinion} | {i - 1 for i in inst.aspect.indices()}
    reference = [f.lower() for f in forms]

    candidates: list[tuple[str, list[str]]] = []
    for edit in surface_edits:
        new = surface_edit(forms, upos, protected, edit)
        if new is not None:
            candidates.append((edit, new))
    for relation in ("synonym", "antonym"):
        new = neutral_substitution(inst, sent_lex, rel_lex, protected, relation)
        if new is not None:
            candidates.append((f"neutral-{relation}", new))

    out: list[SyntheticSample] = []
    seen = set()
    rank = 0

    def emit(strategy, new_forms, new_tree, aspect, reparse):
        nonlocal rank
        if tuple(new_forms) in seen:
            return
        seen.add(tuple(new_forms))
        conf = meteor([f.lower() for f in new_forms], reference)
        if not conf >= threshold:
            return
        out.append(SyntheticSample(
            id=f"{inst.id}#n{rank}", source_id=inst.id, kind=SampleKind.BACKGROUND_REWRITE,
            tree=new_tree, aspect=aspect, label=inst.label, confidence=conf,
            needs_reparse=reparse, rank=rank, strategy=strategy,
            gold_opinion=inst.gold_opinion if not reparse else None,
        ))
        stats.counts[strategy] = stats.counts.get(strategy, 0) + 1
        rank += 1

    for strategy, new in candidates:
        emit(strategy, new, tree.with_forms(new), inst.aspect, False)

    if paraphraser is not None:
        try:
            res = paraphrase_rewrite(inst, paraphraser, sent_lex, opinion)
        except ParaphraseError as exc:
            log.debug("%s: paraphrase skipped (%s)", inst.id, exc)
            stats.paraphrase_failures += 1
            res = None
        if res is not None:
            if res[2] == "restored":
                stats.paraphrase_rejected += 1
            new_forms, start, outcome = res
            span_len = len(inst.aspect.indices())
            aspect = AspectSpan(start, start + span_len)
            emit(f"paraphrase-{outcome}", new_forms, flat_tree(new_forms, root=start), aspect, True)
    return out
