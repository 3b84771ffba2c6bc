"""Small directional experiments on the toy setup.

Each probe trains tiny models and returns the pair of numbers whose order is
the property of interest: discriminator type accuracy with and without the
reversal weight, positive versus negative pair cosine after contrastive
training, and dev accuracy as parse quality degrades.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .augment import SampleKind, StubParaphraser, build_synthetic
from .corpus import AbsaInstance, inject_parse_noise
from .model import AbsaModel, ModelConfig, Vocab
from .toydata import ToyData, load_toy
from .training import SyntheticIndex, TrainConfig, accuracy, matcher, train


def small_config(**overrides) -> ModelConfig:
    base = dict(d_model=16, n_transformer_layers=1, n_heads=2, d_ff=32, d_gcn=8, n_gcn_layers=1,
                d_label_embedding=4)
    base.update(overrides)
    return ModelConfig(**base)


def toy_vocab(toy: ToyData) -> Vocab:
    return Vocab.build(i.tree for i in toy.train + toy.dev + toy.test)


def noisy_corpus(corpus: Sequence[AbsaInstance], rate: float, seed: int,
                 inventory: Sequence[str] | None = None) -> list[AbsaInstance]:
    """Instances over noisy copies of their trees; instances sharing a tree share its copy."""
    kwargs = {"inventory": inventory} if inventory else {}
    cache = {}
    out = []
    for inst in corpus:
        key = id(inst.tree)
        if key not in cache:
            cache[key] = inject_parse_noise(inst.tree, rate, seed * 1000 + len(cache), **kwargs)
        out.append(dataclasses.replace(inst, tree=cache[key]))
    return out


@dataclass
class AdversarialProbe:
    accuracy: dict          # lambda_a -> mean held-out type accuracy
    per_seed: dict


def adversarial_probe(lambdas=(0.0, 0.6), seeds=(0, 1, 2), epochs: int = 10,
                      toy: ToyData | None = None) -> AdversarialProbe:
    """Train regime a at each reversal weight; score the discriminator on dev pairs.

    Held-out pairs are the dev instances matched with their own synthetic
    variants, so the discriminator never saw these sentences.
    """
    toy = toy or load_toy()
    lex = toy.lexicons
    synthetic = build_synthetic(toy.train, lex, toy.embedder(), paraphraser=StubParaphraser(lex.relations)).all()
    held_out = build_synthetic(toy.dev, lex, toy.embedder()).all()
    by_id = {i.id: i for i in toy.dev}
    vocab = toy_vocab(toy)
    per_seed = {}
    for lam in lambdas:
        scores = []
        for seed in seeds:
            model = AbsaModel(small_config(), vocab, seed=seed)
            cfg = TrainConfig(regime="a", batch_size=4, lr=3e-3, lambda_a=lam, max_epochs=epochs,
                              seed=seed, patience=0, disc_hidden=0)
            result = train(cfg, model, toy.train, synthetic)
            other = result.model_s or result.model
            hits = 0
            for s in held_out:
                v = matcher(result.model.predict(by_id[s.source_id]).r_adv, other.predict(s.as_instance()).r_adv)
                hits += result.disc.predict(v) == s.kind.type_id
            scores.append(hits / len(held_out))
        per_seed[lam] = scores
    return AdversarialProbe({lam: float(np.mean(v)) for lam, v in per_seed.items()}, per_seed)


def _cos(a, b) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def pair_cosines(model: AbsaModel, raw: Sequence[AbsaInstance], index: SyntheticIndex) -> tuple[float, float]:
    """Mean r_f cosine over positive pairs and over negative pairs.

    Positives are same-label sentiment-modified variants; negatives are
    flipped variants and aspect-added variants.
    """
    pos, neg = [], []
    for r in raw:
        rf = model.predict(r).r_f
        for s in index.family(r.id, SampleKind.SENTIMENT_MOD):
            (pos if s.label == r.label else neg).append(_cos(rf, model.predict(s.as_instance()).r_f))
        for s in index.family(r.id, SampleKind.ASPECT_ADDITION):
            neg.append(_cos(rf, model.predict(s.as_instance()).r_f))
    return math.fsum(pos) / len(pos), math.fsum(neg) / len(neg)


def contrastive_probe(seed: int = 0, epochs: int = 8, toy: ToyData | None = None) -> tuple[float, float]:
    toy = toy or load_toy()
    synthetic = build_synthetic(toy.train, toy.lexicons, toy.embedder()).all()
    model = AbsaModel(small_config(), toy_vocab(toy), seed=seed)
    cfg = TrainConfig(regime="e+c", batch_size=8, lr=3e-3, max_epochs=epochs, seed=seed, patience=0)
    train(cfg, model, toy.train, synthetic)
    return pair_cosines(model, toy.train, SyntheticIndex(synthetic, [i.id for i in toy.train]))


def syntax_probe(rates=(0.0, 0.5, 1.0), seeds=range(5), draws: int = 3, epochs: int = 20,
                 toy: ToyData | None = None) -> dict:
    """Dev accuracy per parse-noise rate, averaged over seeds and noise draws.

    Models train on clean parses; the noise stands in for a weaker parser at
    test time.  The encoder has no attention layers so that word order
    reaches the classifier only through the tree.
    """
    toy = toy or load_toy()
    vocab = toy_vocab(toy)
    config = small_config(n_transformer_layers=0, d_gcn=16, n_gcn_layers=2, d_label_embedding=8)
    acc = {rate: [] for rate in rates}
    for seed in seeds:
        model = AbsaModel(config, vocab, seed=seed)
        train(TrainConfig(batch_size=8, lr=1e-2, max_epochs=epochs, seed=seed, patience=0), model, toy.train)
        for rate in rates:
            acc[rate].append(np.mean([accuracy(model, noisy_corpus(toy.dev, rate, seed * 10 + k))
                                      for k in range(draws)]))
    return {rate: float(np.mean(v)) for rate, v in acc.items()}
