"""Sentiment-strength, synonym/antonym and negation resources."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Polarity

log = logging.getLogger(__name__)

DEFAULT_NEGATIONS = ("not", "n't", "never")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class SentimentEntry:
    word: str
    upos: str
    scores: dict  # Polarity -> strength in [0, 1]

    def __getitem__(self, polarity: Polarity) -> float:
        return self.scores[polarity]

    def dominant(self) -> Polarity:
        return max(Polarity, key=lambda p: (self.scores[p], -p.value))


@dataclass
class SentimentLexicon:
    entries: dict = field(default_factory=dict)  # (word, upos) -> SentimentEntry
    by_word: dict = field(default_factory=dict)  # word -> SentimentEntry (fallback)
    duplicates: int = 0

    def lookup(self, word: str, upos: str | None = None) -> SentimentEntry | None:
        """Scores for (word, upos), falling back to any entry for the word."""
        w = word.lower()
        if upos is not None:
            hit = self.entries.get((w, upos))
            if hit is not None:
                return hit
        return self.by_word.get(w)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())


def _check_score(value: str, where: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise LexiconError(f"{where}: score {value!r} is not a number") from None
    if not 0.0 <= x <= 1.0:
        raise LexiconError(f"{where}: score {x} outside [0, 1]")
    return x


def load_sentiment_lexicon(path) -> SentimentLexicon:
    """Read a 5-column TSV: word, UPOS, positive, neutral, negative.

    Several rows for the same (word, UPOS) key, as produced by flattening a
    synset-level resource, are averaged; each repeat is counted in
    ``duplicates``.
    """
    rows = defaultdict(list)
    order = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise LexiconError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            where = f"{path}:{lineno}"
            key = (cols[0].lower(), cols[1])
            if key not in rows:
                order.append(key)
            rows[key].append(tuple(_check_score(c, where) for c in cols[2:]))
    lex = SentimentLexicon()
    for key in order:
        vals = rows[key]
        lex.duplicates += len(vals) - 1
        mean = [sum(v[i] for v in vals) / len(vals) for i in range(3)]
        entry = SentimentEntry(key[0], key[1], {
            Polarity.POSITIVE: mean[0],
            Polarity.NEUTRAL: mean[1],
            Polarity.NEGATIVE: mean[2],
        })
        lex.entries[key] = entry
        lex.by_word.setdefault(key[0], entry)
    if lex.duplicates:
        log.warning("%s: %d duplicate rows averaged", path, lex.duplicates)
    return lex


@dataclass
class RelationLexicon:
    entries: dict = field(default_factory=dict)  # (word, upos) -> {"synonym": [...], "antonym": [...]}

    def add(self, word: str, upos: str, relation: str, target: str) -> None:
        if relation not in ("synonym", "antonym"):
            raise LexiconError(f"unknown relation {relation!r}")
        word, target = word.lower(), target.lower()
        if target == word:
            return
        slot = self.entries.setdefault((word, upos), {"synonym": [], "antonym": []})
        other = "antonym" if relation == "synonym" else "synonym"
        if target in slot[other]:
            raise LexiconError(f"{target!r} is both synonym and antonym of {word!r}/{upos}")
        if target not in slot[relation]:
            slot[relation].append(target)


def load_relation_lexicon(path) -> RelationLexicon:
    lex = RelationLexicon()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise LexiconError(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
            try:
                lex.add(*cols)
            except LexiconError as exc:
                raise LexiconError(f"{path}:{lineno}: {exc}") from None
    return lex


def candidates_for(word: str, upos: str, relation: str, lex: RelationLexicon) -> list[str]:
    if relation not in ("synonym", "antonym"):
        raise LexiconError(f"unknown relation {relation!r}")
    slot = lex.entries.get((word.lower(), upos))
    if slot is None:
        return []
    return [w for w in slot[relation] if w != word.lower()]


def load_negations(path) -> tuple[str, ...]:
    words = [w.strip() for w in Path(path).read_text(encoding="utf-8").splitlines()]
    words = [w for w in words if w and not w.startswith("#")]
    if not words:
        raise LexiconError(f"{path}: empty negation list")
    return tuple(words)


@dataclass(frozen=True)
class Lexicons:
    """The three resources the generators consult, bundled for convenience."""

    sentiment: SentimentLexicon
    relations: RelationLexicon
    negations: tuple[str, ...] = DEFAULT_NEGATIONS


def load_lexicons(sentiment_path, relation_path, negation_path=None) -> Lexicons:
    negs = load_negations(negation_path) if negation_path else DEFAULT_NEGATIONS
    return Lexicons(load_sentiment_lexicon(sentiment_path), load_relation_lexicon(relation_path), negs)
