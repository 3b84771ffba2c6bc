"""Training regimes: plain cross-entropy, adversarial, and either one joined with contrastive terms."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .augment.samples import SampleKind, SyntheticSample
from .autodiff import (AdamState, NumericError, Tape, Tensor, adam_step, backward, ops,
                       save_checkpoint)
from .corpus import AbsaInstance
from .model import AbsaModel, DropoutStream, argmax, format_kv

log = logging.getLogger(__name__)

REGIMES = ("e", "a", "e+c", "a+c")
SCHEMES = ("ita#o", "ita#s", "itr#o", "itr#s")


class TrainingError(RuntimeError):
    pass


class BatchError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    regime: str = "e"
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 5
    lr: float = 1e-4
    weight_decay: float = 5e-5
    lambda_a: float = 0.6
    lambda_c1: float = 0.3
    lambda_c2: float = 0.2
    lambda_c3: float = 0.3
    lambda_c4: float = 0.2
    mu: float = 0.1
    n_positives: int = 2
    n_negatives: int = 4
    disc_hidden: int = 32
    seed: int = 0
    share_weights: bool = True
    include_synthetic: bool = False   # regime e only: train on raw + synthetic as plain instances
    dropout: bool = True
    target_train_accuracy: float = 0.0  # stop once training accuracy reaches this (0 = off)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        lams = (self.lambda_a, self.lambda_c1, self.lambda_c2, self.lambda_c3, self.lambda_c4)
        if min(lams) < 0:
            raise ValueError("lambda weights must be non-negative")
        if self.mu <= 0:
            raise ValueError("temperature mu must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def adversarial(self) -> bool:
        return self.regime.startswith("a")

    @property
    def contrastive(self) -> bool:
        return self.regime.endswith("+c")

    def scheme_weights(self) -> dict:
        return dict(zip(SCHEMES, (self.lambda_c1, self.lambda_c2, self.lambda_c3, self.lambda_c4)))


# --- losses --------------------------------------------------------------------------

def loss_ce(logits: Sequence[Tensor], targets: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of the gold labels."""
    if not logits:
        raise BatchError("empty batch")
    terms = [ops.cross_entropy(l, int(t)) for l, t in zip(logits, targets)]
    return ops.scale(_sum(terms), 1.0 / len(terms))


def matcher(r_o, r_s) -> Tensor:
    """[r_o; r_s; r_o - r_s; r_o * r_s]."""
    r_o = r_o if isinstance(r_o, Tensor) else Tensor(r_o)
    r_s = r_s if isinstance(r_s, Tensor) else Tensor(r_s)
    if r_o.shape != r_s.shape or r_o.data.ndim != 1:
        raise BatchError(f"matcher needs two equal-length vectors, got {r_o.shape} and {r_s.shape}")
    return ops.concat([r_o, r_s, ops.sub(r_o, r_s), ops.mul(r_o, r_s)])


def contrastive_term(anchor: Tensor, positives: Sequence[Tensor], negatives: Sequence[Tensor],
                     mu: float) -> Tensor:
    """-sum_j log(exp(s+_j/mu) / sum_k exp(s-_k/mu)) for one anchor.

    The denominator holds negatives only, so the value can go below zero.
    """
    neg = ops.concat([ops.reshape(ops.cosine_similarity(n, anchor), (1,)) for n in negatives])
    log_denom = ops.log(ops.sum_all(ops.exp(ops.scale(neg, 1.0 / mu))))
    pos = ops.concat([ops.reshape(ops.cosine_similarity(p, anchor), (1,)) for p in positives])
    # sum_j (log_denom - s+_j / mu)
    return ops.sub(ops.scale(log_denom, float(len(positives))), ops.scale(ops.sum_all(pos), 1.0 / mu))


def contrastive_value(pos_sims, neg_sims, mu: float) -> float:
    """Plain-float version of `contrastive_term` for checking and reporting."""
    log_denom = math.log(math.fsum(math.exp(s / mu) for s in neg_sims))
    return -math.fsum(s / mu - log_denom for s in pos_sims)


class Discriminator:
    """Three-way synthetic-type classifier over matcher features."""

    def __init__(self, d_in: int, hidden: int, seed: int):
        rng = np.random.default_rng([seed, 7919])
        self.params: dict[str, Tensor] = {}
        if hidden:
            self._add("disc.W1", rng.normal(0, 1 / math.sqrt(d_in), (d_in, hidden)))
            self._add("disc.b1", np.zeros(hidden))
            d_in = hidden
        self._add("disc.W2", rng.normal(0, 1 / math.sqrt(d_in), (d_in, len(SampleKind))))
        self._add("disc.b2", np.zeros(len(SampleKind)))

    def _add(self, name, arr):
        self.params[name] = Tensor(arr, requires_grad=True, name=name)

    def logits(self, v: Tensor) -> Tensor:
        p = self.params
        if "disc.W1" in p:
            v = ops.tanh(ops.add(ops.matmul(v, p["disc.W1"]), p["disc.b1"]))
        return ops.add(ops.matmul(v, p["disc.W2"]), p["disc.b2"])

    def predict(self, v) -> int:
        return argmax(self.logits(v if isinstance(v, Tensor) else Tensor(v)).data)


# --- batches -----------------------------------------------------------------------

@dataclass
class PairedBatch:
    raw: list                                      # AbsaInstance
    paired: dict = field(default_factory=dict)     # raw id -> adversarial partners, one per kind
    contrast: dict = field(default_factory=dict)   # raw id -> scheme -> (positives, negatives)

    def ids(self) -> list[str]:
        out = [r.id for r in self.raw]
        out += [s.id for group in self.paired.values() for s in group]
        for schemes in self.contrast.values():
            for pos, neg in schemes.values():
                out += [s.id for s in pos + neg]
        return out


class SyntheticIndex:
    """Synthetic samples grouped by source id and kind."""

    def __init__(self, samples: Sequence[SyntheticSample], raw_ids):
        raw_ids = set(raw_ids)
        self.by_source: dict[str, dict[SampleKind, list]] = {}
        for s in samples:
            if s.source_id not in raw_ids:
                raise BatchError(f"synthetic sample {s.id} has unknown source {s.source_id!r}")
            self.by_source.setdefault(s.source_id, {}).setdefault(s.kind, []).append(s)

    def family(self, raw_id: str, kind: SampleKind) -> list:
        return self.by_source.get(raw_id, {}).get(kind, [])

    def pick_pairs(self, raw_id: str, rng) -> list[SyntheticSample]:
        """One random partner of every kind the raw instance has."""
        out = []
        for kind in SampleKind:
            group = self.family(raw_id, kind)
            if group:
                out.append(group[int(rng.integers(len(group)))])
        return out

    def pick_contrast(self, raw: AbsaInstance, cfg: TrainConfig, rng) -> dict | None:
        da = self.family(raw.id, SampleKind.SENTIMENT_MOD)
        pos = [s for s in da if s.label == raw.label]
        intra = [s for s in da if s.label != raw.label]
        inter = self.family(raw.id, SampleKind.ASPECT_ADDITION)

        def sample(group, k):
            if len(group) <= k:
                return list(group)
            idx = sorted(rng.choice(len(group), size=k, replace=False))
            return [group[i] for i in idx]

        if not pos:
            return None
        pos = sample(pos, cfg.n_positives)
        out = {}
        if intra:
            neg = sample(intra, cfg.n_negatives)
            out["ita#o"] = out["ita#s"] = (pos, neg)
        if inter:
            neg = sample(inter, cfg.n_negatives)
            out["itr#o"] = out["itr#s"] = (pos, neg)
        return out or None


def make_batches(raw: Sequence[AbsaInstance], index: SyntheticIndex | None, cfg: TrainConfig,
                 epoch: int) -> tuple[list[PairedBatch], int]:
    """Shuffle, split and attach synthetic partners; returns batches and the skipped-anchor count."""
    rng = np.random.default_rng([cfg.seed, epoch, 1])
    order = rng.permutation(len(raw))
    batches, skipped = [], 0
    for start in range(0, len(order), cfg.batch_size):
        items = [raw[i] for i in order[start:start + cfg.batch_size]]
        b = PairedBatch(items)
        if index is not None:
            for inst in items:
                if cfg.adversarial:
                    partners = index.pick_pairs(inst.id, rng)
                    if partners:
                        b.paired[inst.id] = partners
                if cfg.contrastive:
                    c = index.pick_contrast(inst, cfg, rng)
                    if c is None:
                        skipped += 1
                    else:
                        b.contrast[inst.id] = c
        batches.append(b)
    return batches, skipped


# --- objective ------------------------------------------------------------------------

@dataclass
class BatchLoss:
    graph: Tensor            # differentiable surrogate; its gradients are the training gradients
    value: float             # objective as reported
    parts: dict
    predictions: dict        # raw id -> predicted class (raw side only)


class Objective:
    """Computes the regime loss for one batch with the current parameters."""

    def __init__(self, cfg: TrainConfig, model_o: AbsaModel, model_s: AbsaModel | None = None,
                 disc: Discriminator | None = None):
        self.cfg = cfg
        self.model_o = model_o
        self.model_s = model_s or model_o
        self.disc = disc

    def params(self) -> dict:
        out = {f"o.{k}": v for k, v in self.model_o.params.items()}
        if self.model_s is not self.model_o:
            out.update({f"s.{k}": v for k, v in self.model_s.params.items()})
        if self.disc is not None:
            out.update(self.disc.params)
        return out

    def __call__(self, batch: PairedBatch, step: int, train: bool = True,
                 adv_sign: float | None = None) -> BatchLoss:
        """`adv_sign` replaces the reversal by a plain weight (used by gradient checks)."""
        cfg = self.cfg
        drop = DropoutStream(cfg.seed, step) if (train and cfg.dropout) else None
        cache: dict = {}

        def fwd(inst, synthetic: bool):
            key = (inst.id, synthetic)
            if key not in cache:
                model = self.model_s if synthetic else self.model_o
                cache[key] = model.forward(inst, drop)
            return cache[key]

        parts: dict = {}
        preds = {}
        task_terms = []
        for inst in batch.raw:
            fw = fwd(inst, False)
            preds[inst.id] = argmax(fw.logits.data)
            task_terms.append(ops.cross_entropy(fw.logits, int(inst.label)))
        n_inputs = len(batch.raw)

        if cfg.adversarial:
            disc_terms, disc_graph = [], []
            for inst in batch.raw:
                for s in batch.paired.get(inst.id, ()):
                    si = s.as_instance()
                    fs = fwd(si, True)
                    n_inputs += 1
                    task_terms.append(ops.cross_entropy(fs.logits, int(s.label)))
                    v = matcher(fwd(inst, False).r_adv, fs.r_adv)
                    if adv_sign is None:
                        ce = ops.cross_entropy(self.disc.logits(ops.grad_reverse(v, cfg.lambda_a)), s.kind.type_id)
                        disc_graph.append(ce)
                    else:
                        ce = ops.cross_entropy(self.disc.logits(v), s.kind.type_id)
                        disc_graph.append(ops.scale(ce, adv_sign))
                    disc_terms.append(float(ce.data))
            la1 = math.fsum(disc_terms)
            la2 = math.fsum(float(t.data) for t in task_terms)
            parts["L_a1"] = la1
            parts["L_a2"] = la2
            main = _sum(task_terms + disc_graph)
            main_value = (cfg.lambda_a * la1 + la2) / n_inputs
            parts["L_a"] = main_value
        else:
            main = _sum(task_terms)
            main_value = float(main.data) / len(task_terms)
            parts["L_e"] = main_value
        # contrastive components are normalised by the same input count as the main term
        if cfg.contrastive:
            weights = cfg.scheme_weights()
            scheme_terms = {k: [] for k in SCHEMES}
            seen = set()
            for inst in batch.raw:
                for scheme, (pos, neg) in batch.contrast.get(inst.id, {}).items():
                    which = "r_f" if scheme.endswith("#o") else "r_s"
                    anchor = getattr(fwd(inst, False), which)
                    p = [getattr(fwd(s.as_instance(), True), which) for s in pos]
                    q = [getattr(fwd(s.as_instance(), True), which) for s in neg]
                    seen.update(s.id for s in pos + neg)
                    scheme_terms[scheme].append(contrastive_term(anchor, p, q, cfg.mu))
            seen -= {s.id for group in batch.paired.values() for s in group}
            n_c = n_inputs + len(seen)
            contrast_graph = []
            total_c = 0.0
            for scheme in SCHEMES:
                val = math.fsum(float(t.data) for t in scheme_terms[scheme])
                parts[scheme] = val
                total_c += weights[scheme] * val
                if scheme_terms[scheme] and weights[scheme]:
                    contrast_graph.append(ops.scale(_sum(scheme_terms[scheme]), weights[scheme]))
            parts["L_c"] = total_c / n_c
            if cfg.adversarial:
                graph = ops.scale(main, 1.0 / n_inputs)
            else:
                graph = ops.scale(main, 1.0 / len(task_terms))
            if contrast_graph:
                graph = ops.add(graph, ops.scale(_sum(contrast_graph), 1.0 / n_c))
            value = main_value + parts["L_c"]
        else:
            graph = ops.scale(main, 1.0 / (n_inputs if cfg.adversarial else len(task_terms)))
            value = main_value
        parts["loss"] = value
        return BatchLoss(graph, value, parts, preds)


def _sum(terms):
    total = terms[0]
    for t in terms[1:]:
        total = ops.add(total, t)
    return total


# --- loop -------------------------------------------------------------------------------

@dataclass
class TrainResult:
    model: AbsaModel
    model_s: AbsaModel | None
    disc: Discriminator | None
    history: list
    best_epoch: int
    best_dev: float | None
    epochs_run: int
    skipped_anchors: int


def accuracy(model: AbsaModel, corpus: Sequence[AbsaInstance]) -> float:
    if not corpus:
        return float("nan")
    return sum(model.predict(i).label == i.label for i in corpus) / len(corpus)


def check_requirements(cfg: TrainConfig, synthetic: Sequence[SyntheticSample]) -> None:
    kinds = {s.kind for s in synthetic}
    if cfg.adversarial and not synthetic:
        raise TrainingError(f"regime {cfg.regime} needs a synthetic corpus")
    if cfg.contrastive and SampleKind.SENTIMENT_MOD not in kinds:
        raise TrainingError(f"regime {cfg.regime} needs sentiment-modified samples for contrastive pairs")


def train(cfg: TrainConfig, model: AbsaModel, raw: Sequence[AbsaInstance],
          synthetic: Sequence[SyntheticSample] = (), dev: Sequence[AbsaInstance] = (),
          log_path=None, dump_dir=None) -> TrainResult:
    """Mini-batch Adam training with dev-accuracy early stopping.

    The returned model holds the parameters of the best dev epoch (or the
    last epoch when there is no dev set).
    """
    check_requirements(cfg, synthetic)
    raw = list(raw)
    index = None
    if cfg.adversarial or cfg.contrastive:
        index = SyntheticIndex(synthetic, [r.id for r in raw])
    elif cfg.include_synthetic:
        raw = raw + [s.as_instance() for s in synthetic]
    model_s = None
    if not cfg.share_weights and cfg.adversarial:
        model_s = AbsaModel(model.config, model.vocab, model.labels, seed=cfg.seed + 1)
        model_s.load_state(model.state())
    disc = None
    if cfg.adversarial:
        d_adv = model.config.d_model + 2 * (model.config.d_final - model.config.d_model)
        disc = Discriminator(4 * d_adv, cfg.disc_hidden, cfg.seed)
    objective = Objective(cfg, model, model_s, disc)
    params = objective.params()
    names = {id(t): k for k, t in params.items()}
    adam = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)

    logf = open(log_path, "w", encoding="utf-8") if log_path else None
    history = []
    best = (-1.0, -1)
    best_state = None
    stale = 0
    step = 0
    skipped_total = 0
    epoch = 0

    def emit(rec):
        history.append(rec)
        if logf:
            logf.write(json.dumps(rec, sort_keys=True) + "\n")

    try:
        for epoch in range(1, cfg.max_epochs + 1):
            batches, skipped = make_batches(raw, index, cfg, epoch)
            skipped_total += skipped
            for batch in batches:
                step += 1
                try:
                    with Tape() as tape:
                        bl = objective(batch, step)
                        if not math.isfinite(bl.value):
                            raise NumericError(f"loss {bl.value}")
                    grads = backward(tape, bl.graph, list(params.values()))
                except NumericError as exc:
                    path = _dump_batch(dump_dir, batch, step, exc)
                    raise TrainingError(f"non-finite value at iteration {step}: {exc}"
                                        + (f"; batch dumped to {path}" if path else "")) from exc
                adam_step(adam, params, {names[id(t)]: g for t, g in grads.items()})
                emit({"iter": step, "epoch": epoch, **{k: _r(v) for k, v in bl.parts.items()}})
            train_acc = accuracy(model, raw)
            dev_acc = accuracy(model, dev) if dev else None
            emit({"epoch_end": epoch, "iter": step, "train_acc": train_acc, "dev_acc": dev_acc,
                  "skipped_anchors": skipped})
            score = dev_acc if dev_acc is not None else train_acc
            if score > best[0]:
                best = (score, epoch)
                best_state = model.state()
                stale = 0
            else:
                stale += 1
            if cfg.target_train_accuracy and train_acc >= cfg.target_train_accuracy:
                if not dev:
                    best = (score, epoch)
                    best_state = model.state()
                break
            if dev and cfg.patience and stale >= cfg.patience:
                break
    finally:
        if logf:
            logf.close()
    if dev and best_state is not None:
        model.load_state(best_state)
    elif not dev:
        best = (best[0], epoch)
    return TrainResult(model, model_s, disc, history, best[1], best[0] if dev else None,
                       epoch, skipped_total)


def _r(v):
    return float(f"{v:.12g}") if isinstance(v, float) else v


def _dump_batch(dump_dir, batch: PairedBatch, step: int, exc) -> Path | None:
    if dump_dir is None:
        return None
    path = Path(dump_dir) / f"nonfinite_batch_{step}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"iteration": step, "error": str(exc), "inputs": batch.ids(),
                                "sentences": [r.tree.text() for r in batch.raw]}, indent=1),
                    encoding="utf-8")
    log.error("non-finite loss at iteration %d, batch written to %s", step, path)
    return path


def save_training(result: TrainResult, cfg: TrainConfig, directory) -> Path:
    directory = Path(directory)
    result.model.save(directory)
    extra = {}
    if result.disc is not None:
        extra.update({k: t.data for k, t in result.disc.params.items()})
    if result.model_s is not None:
        extra.update({f"s.{k}": v for k, v in result.model_s.state().items()})
    if extra:
        save_checkpoint(extra, directory / "aux")
    (directory / "train.cfg").write_text(format_kv(cfg), encoding="utf-8")
    return directory
