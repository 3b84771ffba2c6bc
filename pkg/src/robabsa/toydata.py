"""Access to the bundled toy corpus, lexicons and word vectors."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .augment import MeanVectorEmbedder, load_word_vectors
from .corpus import AbsaInstance, load_corpus, load_label_inventory
from .lexicon import Lexicons, load_lexicons


def toy_dir() -> Path:
    return Path(str(resources.files("robabsa") / "data" / "toy"))


@dataclass
class ToyData:
    train: list[AbsaInstance]
    dev: list[AbsaInstance]
    test: list[AbsaInstance]
    lexicons: Lexicons
    vectors: dict
    labels: tuple

    def embedder(self) -> MeanVectorEmbedder:
        return MeanVectorEmbedder(self.vectors)


def load_toy(directory=None) -> ToyData:
    d = Path(directory) if directory else toy_dir()
    labels = load_label_inventory(d / "labels.txt")

    def split(name):
        return load_corpus(d / f"{name}.jsonl", d / f"{name}.conllu", labels)

    return ToyData(
        train=split("train"), dev=split("dev"), test=split("test"),
        lexicons=load_lexicons(d / "sentiment.tsv", d / "relations.tsv", d / "negations.txt"),
        vectors=load_word_vectors(d / "vectors.tsv"),
        labels=labels,
    )
