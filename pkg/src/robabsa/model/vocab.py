from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from ..corpus import DEFAULT_LABELS, DepTree

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        if self.tokens[:4] != list(SPECIALS):
            self.tokens = list(SPECIALS) + [t for t in self.tokens if t not in SPECIALS]
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def id(self, word: str) -> int:
        return self.index.get(word.lower() if word not in SPECIALS else word, self.index[UNK])

    @classmethod
    def build(cls, trees: Iterable[DepTree], min_count: int = 1) -> "Vocab":
        counts: dict[str, int] = {}
        for tree in trees:
            for f in tree.forms:
                counts[f.lower()] = counts.get(f.lower(), 0) + 1
        words = sorted(w for w, c in counts.items() if c >= min_count)
        return cls(list(SPECIALS) + words)

    def save(self, path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocab":
        return cls([l for l in Path(path).read_text(encoding="utf-8").splitlines() if l])


class LabelIndex:
    """Relation ids for the syntax layer.

    ``self`` and ``none`` come first; every relation then gets one id when
    the row token governs the column token and another for the reverse.
    """

    SELF, NONE = 0, 1

    def __init__(self, labels: Sequence[str] = DEFAULT_LABELS):
        self.labels = tuple(dict.fromkeys(labels))
        self.index = {lab: k for k, lab in enumerate(self.labels)}

    def __len__(self):
        return 2 + 2 * len(self.labels)

    def id(self, label: str, governs: bool) -> int:
        k = self.index.get(label)
        if k is None:
            k = self.index.get(label.split(":")[0])
        if k is None:
            k = self.index.get("dep")
        if k is None:
            raise KeyError(f"relation {label!r} not in label inventory")
        return 2 + 2 * k + (0 if governs else 1)

    def save(self, path) -> None:
        Path(path).write_text("".join(l + "\n" for l in self.labels), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "LabelIndex":
        return cls([l for l in Path(path).read_text(encoding="utf-8").splitlines() if l])
