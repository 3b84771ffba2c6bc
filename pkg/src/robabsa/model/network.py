"""Transformer base encoder, label-aware syntax GCN, aspect-aware aggregation, classifier."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..autodiff import Tensor, load_checkpoint, ops, save_checkpoint
from ..corpus import AbsaInstance, DepTree, Polarity
from .config import ModelConfig, format_kv, load_model_config
from .vocab import CLS, SEP, LabelIndex, Vocab


class DropoutStream:
    """Hands out dropout keys (seed, step, node) in call order."""

    def __init__(self, seed: int, step: int):
        self.seed, self.step, self.node = seed, step, 0

    def __call__(self, x: Tensor, rate: float) -> Tensor:
        self.node += 1
        return ops.dropout(x, rate, True, self.seed, self.step, self.node)


@dataclass
class EncodedInput:
    ids: np.ndarray
    positions: np.ndarray
    segments: np.ndarray
    n: int            # sentence length
    aspect: range     # 0-based positions of aspect tokens in the sequence


@dataclass
class Forward:
    """Tensor-valued internals of one forward pass."""

    logits: Tensor
    beta: Tensor
    r_f: Tensor
    r_a: Tensor
    h_cls: Tensor
    r_s: Tensor
    r_adv: Tensor
    r_asp: Tensor
    attention: list = field(default_factory=list)


@dataclass
class Prediction:
    probs: np.ndarray
    beta: np.ndarray
    r_f: np.ndarray
    r_a: np.ndarray
    r_cls: np.ndarray
    r_s: np.ndarray
    r_adv: np.ndarray

    @property
    def label(self) -> Polarity:
        return Polarity(argmax(self.probs))


def argmax(probs) -> int:
    """First maximal index, so ties resolve Positive < Negative < Neutral."""
    probs = np.asarray(probs)
    return int(np.flatnonzero(probs == probs.max())[0])


def adjacency(tree: DepTree, labels: LabelIndex) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric 0/1 arc matrix with self-loops, and the matching relation-id matrix."""
    n = len(tree)
    b = np.eye(n, dtype=bool)
    rel = np.full((n, n), LabelIndex.NONE, dtype=np.int64)
    np.fill_diagonal(rel, LabelIndex.SELF)
    for a in tree.arcs:
        if a.head == 0:
            continue
        h, d = a.head - 1, a.dependent - 1
        b[h, d] = b[d, h] = True
        rel[h, d] = labels.id(a.label, governs=True)
        rel[d, h] = labels.id(a.label, governs=False)
    return b, rel


def _init(rng, shape, fan_in):
    return rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=shape)


class AbsaModel:
    def __init__(self, config: ModelConfig, vocab: Vocab, labels: LabelIndex | None = None,
                 seed: int = 0):
        labels = labels or LabelIndex()
        config = type(config)(**{**config.__dict__, "vocab_size": len(vocab), "n_label_ids": len(labels)})
        self.config, self.vocab, self.labels = config, vocab, labels
        self.params: dict[str, Tensor] = {}
        rng = np.random.default_rng(seed)
        c = config
        d = c.d_model

        def add(name, arr):
            self.params[name] = Tensor(arr, requires_grad=True, name=name)

        add("emb.word", rng.normal(0.0, 0.1, (c.vocab_size, d)))
        add("emb.pos", rng.normal(0.0, 0.1, (c.max_positions, d)))
        add("emb.seg", rng.normal(0.0, 0.1, (2, d)))
        for l in range(c.n_transformer_layers):
            p = f"trm{l}."
            for w in ("q", "k", "v", "o"):
                add(p + f"W{w}", _init(rng, (d, d), d))
                add(p + f"b{w}", np.zeros(d))
            add(p + "ln1.g", np.ones(d))
            add(p + "ln1.b", np.zeros(d))
            add(p + "W1", _init(rng, (d, c.d_ff), d))
            add(p + "b1", np.zeros(c.d_ff))
            add(p + "W2", _init(rng, (c.d_ff, d), c.d_ff))
            add(p + "b2", np.zeros(d))
            add(p + "ln2.g", np.ones(d))
            add(p + "ln2.b", np.zeros(d))
        if c.n_gcn_layers:
            add("emb.label", rng.normal(0.0, 0.1, (c.n_label_ids, c.d_label_embedding)))
        d_in = d
        for l in range(c.n_gcn_layers):
            width = d_in + c.d_label_embedding + d
            add(f"gcn{l}.Wa", _init(rng, (width, c.d_gcn), width))
            add(f"gcn{l}.ba", np.zeros(c.d_gcn))
            add(f"gcn{l}.wb", _init(rng, (width,), width))
            d_in = c.d_gcn
        add("agg.Wc", _init(rng, (d_in + d, 1), d_in + d))
        add("agg.bc", np.zeros(1))
        add("out.W", _init(rng, (c.d_final, len(Polarity)), c.d_final))
        add("out.b", np.zeros(len(Polarity)))

    # --- input -----------------------------------------------------------------

    def build_input(self, inst: AbsaInstance) -> EncodedInput:
        words = inst.tree.forms
        aspect = inst.aspect_forms
        if not aspect:
            raise ValueError(f"{inst.id}: empty aspect")
        seq = [CLS] + words + [SEP] + aspect + [SEP]
        if len(seq) > self.config.max_positions:
            raise ValueError(f"{inst.id}: sequence of {len(seq)} exceeds max_positions")
        n = len(words)
        ids = np.array([self.vocab.id(w) for w in seq], dtype=np.int64)
        segments = np.array([0] * (n + 2) + [1] * (len(aspect) + 1), dtype=np.int64)
        if self.config.mark_aspect:
            segments[inst.aspect.start:inst.aspect.end] = 1
        return EncodedInput(ids, np.arange(len(seq)), segments, n, range(n + 2, n + 2 + len(aspect)))

    # --- layers ------------------------------------------------------------------

    def attention(self, x: Tensor, layer: int, keep=None) -> Tensor:
        """Multi-head scaled dot-product self-attention (no mask)."""
        p = self.params
        pre = f"trm{layer}."
        d, h = self.config.d_model, self.config.n_heads
        dk = d // h
        q = ops.add(ops.matmul(x, p[pre + "Wq"]), p[pre + "bq"])
        k = ops.add(ops.matmul(x, p[pre + "Wk"]), p[pre + "bk"])
        v = ops.add(ops.matmul(x, p[pre + "Wv"]), p[pre + "bv"])
        heads = []
        for i in range(h):
            qi, ki, vi = (ops.take(t, i * dk, (i + 1) * dk, axis=1) for t in (q, k, v))
            weights = ops.softmax(ops.scale(ops.matmul(qi, ops.transpose(ki)), 1.0 / math.sqrt(dk)))
            if keep is not None:
                keep.append(weights.data)
            heads.append(ops.matmul(weights, vi))
        return ops.add(ops.matmul(ops.concat(heads, axis=1), p[pre + "Wo"]), p[pre + "bo"])

    def transformer_layer(self, x: Tensor, layer: int, keep=None) -> Tensor:
        p = self.params
        pre = f"trm{layer}."
        x = ops.layer_norm(ops.add(x, self.attention(x, layer, keep)), p[pre + "ln1.g"], p[pre + "ln1.b"])
        ff = ops.relu(ops.add(ops.matmul(x, p[pre + "W1"]), p[pre + "b1"]))
        ff = ops.add(ops.matmul(ff, p[pre + "W2"]), p[pre + "b2"])
        return ops.layer_norm(ops.add(x, ff), p[pre + "ln2.g"], p[pre + "ln2.b"])

    def encode_base(self, inst: AbsaInstance, drop: DropoutStream | None = None, keep=None):
        """Returns (h_cls, sentence states n x d, pooled aspect vector)."""
        enc = self.build_input(inst)
        p, c = self.params, self.config
        words = ops.embedding_gather(p["emb.word"], enc.ids)
        extra = ops.add(ops.embedding_gather(p["emb.pos"], enc.positions),
                        ops.embedding_gather(p["emb.seg"], enc.segments))
        if drop is not None:
            words = drop(words, c.dropout_word)
            extra = drop(extra, c.dropout_feature)
        x = ops.add(words, extra)
        for l in range(c.n_transformer_layers):
            x = self.transformer_layer(x, l, keep)
        h_cls = ops.take(x, 0, 1, axis=0)
        h_cls = ops.reshape(h_cls, (c.d_model,))
        sent = ops.take(x, 1, enc.n + 1, axis=0)
        asp = ops.take(x, enc.aspect.start, enc.aspect.stop, axis=0)
        return h_cls, sent, ops.mean_pool(asp, axis=0)

    def usgcn_layer(self, r_prev: Tensor, b: np.ndarray, rel: np.ndarray, r_asp: Tensor,
                    layer: int, drop: DropoutStream | None = None, alpha_out=None) -> Tensor:
        """One syntax-fusion layer over all (i, j) token pairs.

        Pair features are [r_j; e(rel_ij); r_asp]; the attention over j is
        masked by the arc matrix and the messages are the same features
        projected by Wa.
        """
        p = self.params
        n = r_prev.shape[0]
        label_vecs = ops.embedding_gather(p["emb.label"], rel.reshape(-1))
        if drop is not None:
            label_vecs = drop(label_vecs, self.config.dropout_feature)
        pairs = ops.concat([
            ops.concat([r_prev] * n, axis=0),      # row i*n + j holds r_j
            label_vecs,
            ops.tile_rows(r_asp, n * n),
        ], axis=1)
        scores = ops.reshape(ops.matmul(pairs, p[f"gcn{layer}.wb"]), (n, n))
        alpha = ops.masked_softmax(scores, b)
        if alpha_out is not None:
            alpha_out.append(alpha.data)
        messages = ops.add(ops.matmul(pairs, p[f"gcn{layer}.Wa"]), p[f"gcn{layer}.ba"])
        messages = ops.reshape(messages, (n, n, self.config.d_gcn))
        return ops.relu(ops.pair_contract(alpha, messages))

    def aggregate(self, r_last: Tensor, r_asp: Tensor, h_cls: Tensor):
        """Aspect-aware pooling; returns (r_a, beta, r_f)."""
        p = self.params
        n = r_last.shape[0]
        z = ops.concat([r_last, ops.tile_rows(r_asp, n)], axis=1)
        v = ops.tanh(ops.reshape(ops.add(ops.matmul(z, p["agg.Wc"]), p["agg.bc"]), (n,)))
        beta = ops.softmax(v)
        r_a = ops.matmul(beta, r_last)
        return r_a, beta, ops.concat([r_a, h_cls])

    def classify(self, r_f: Tensor) -> Tensor:
        return ops.add(ops.matmul(r_f, self.params["out.W"]), self.params["out.b"])

    # --- full pass --------------------------------------------------------------

    def forward(self, inst: AbsaInstance, drop: DropoutStream | None = None, keep=None) -> Forward:
        h_cls, r, r_asp = self.encode_base(inst, drop, keep)
        if self.config.n_gcn_layers:
            b, rel = adjacency(inst.tree, self.labels)
            for l in range(self.config.n_gcn_layers):
                r = self.usgcn_layer(r, b, rel, r_asp, l, drop)
        r_a, beta, r_f = self.aggregate(r, r_asp, h_cls)
        r_s = ops.mean_pool(r, axis=0)
        return Forward(
            logits=self.classify(r_f), beta=beta, r_f=r_f, r_a=r_a, h_cls=h_cls, r_s=r_s,
            r_adv=ops.concat([h_cls, r_a, r_s]), r_asp=r_asp, attention=keep or [],
        )

    def predict(self, inst: AbsaInstance) -> Prediction:
        fw = self.forward(inst)
        probs = ops.softmax(fw.logits).data
        return Prediction(probs, fw.beta.data, fw.r_f.data, fw.r_a.data, fw.h_cls.data,
                          fw.r_s.data, fw.r_adv.data)

    # --- persistence ------------------------------------------------------------

    def state(self) -> dict:
        return {k: t.data for k, t in self.params.items()}

    def load_state(self, arrays: dict) -> None:
        for k, t in self.params.items():
            if k not in arrays:
                raise KeyError(f"checkpoint lacks parameter {k}")
            if arrays[k].shape != t.data.shape:
                raise ValueError(f"{k}: checkpoint shape {arrays[k].shape} != {t.data.shape}")
            t.data = np.array(arrays[k], dtype=np.float64)

    def save(self, directory) -> Path:
        directory = Path(directory)
        save_checkpoint(self.state(), directory)
        (directory / "model.cfg").write_text(format_kv(self.config), encoding="utf-8")
        self.vocab.save(directory / "vocab.txt")
        self.labels.save(directory / "labels.txt")
        return directory

    @classmethod
    def load(cls, directory) -> "AbsaModel":
        directory = Path(directory)
        model = cls(load_model_config(directory / "model.cfg"), Vocab.load(directory / "vocab.txt"),
                    LabelIndex.load(directory / "labels.txt"))
        model.load_state(load_checkpoint(directory))
        return model

    def load_word_vectors(self, vectors: dict) -> int:
        """Copy pretrained vectors into the word table; returns how many were used."""
        table = self.params["emb.word"].data
        hits = 0
        for word, vec in vectors.items():
            i = self.vocab.index.get(word.lower())
            if i is None:
                continue
            if len(vec) != table.shape[1]:
                raise ValueError(f"word vectors have {len(vec)} dims, model expects {table.shape[1]}")
            table[i] = vec
            hits += 1
        return hits


def describe(model: AbsaModel) -> str:
    sizes = {k: int(v.data.size) for k, v in model.params.items()}
    return json.dumps({"parameters": sum(sizes.values()), "groups": len(sizes)})
