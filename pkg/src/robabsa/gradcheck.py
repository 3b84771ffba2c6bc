"""End-to-end finite-difference checks of the model and the training objectives.

Each check draws a tiny random model and a two-instance batch, then compares
the directional derivative of the batch loss along a random direction with
the analytic gradient, one parameter group at a time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .augment.samples import SampleKind, SyntheticSample
from .autodiff import Tape, backward
from .autodiff.gradcheck import CheckResult, check_ops, relative_error
from .corpus import AbsaInstance, AspectSpan, Polarity, tree_from_heads
from .model import AbsaModel, ModelConfig, Vocab
from .training import REGIMES, Discriminator, Objective, PairedBatch, TrainConfig

STEP = 1e-6
FLOOR = 1e-6
TOLERANCE = 1e-3

WORDS = ["food", "staff", "is", "was", "great", "awful", "the", "a", "not", "and", "but", "very"]
LABELS = ["det", "nsubj", "cop", "amod", "obj", "conj", "cc", "punct", "advmod"]


def tiny_config() -> ModelConfig:
    return ModelConfig(d_model=8, n_transformer_layers=1, n_heads=2, d_ff=8, d_gcn=4,
                       n_gcn_layers=2, d_label_embedding=3, max_positions=32)


def random_tree(rng, n: int):
    """Random labelled tree: each token attaches to one placed before it in a random order."""
    order = [int(i) for i in rng.permutation(n)]
    heads = [0] * n
    for k, tok in enumerate(order[1:], start=1):
        heads[tok] = order[int(rng.integers(k))] + 1
    labels = ["root" if h == 0 else LABELS[int(rng.integers(len(LABELS)))] for h in heads]
    forms = [WORDS[int(rng.integers(len(WORDS)))] for _ in range(n)]
    return tree_from_heads(forms, heads, labels)


def random_instance(rng, name: str, n_range=(2, 6)) -> AbsaInstance:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    tree = random_tree(rng, n)
    start = int(rng.integers(1, n + 1))
    end = min(n + 1, start + int(rng.integers(1, 3)))
    return AbsaInstance(name, tree, AspectSpan(start, end), Polarity(int(rng.integers(3))))


def _synthetic(rng, raw: AbsaInstance, kind: SampleKind, label: Polarity, k: int) -> SyntheticSample:
    inst = random_instance(rng, f"{raw.id}#{kind.short}{k}")
    return SyntheticSample(inst.id, raw.id, kind, inst.tree, inst.aspect, label, 1.0, rank=k)


def random_batch(rng, regime: str) -> PairedBatch:
    raw = [random_instance(rng, f"r{k}") for k in range(2)]
    batch = PairedBatch(raw)
    cfg = TrainConfig(regime=regime)
    for r in raw:
        other = Polarity((int(r.label) + 1) % 3)
        same = _synthetic(rng, r, SampleKind.SENTIMENT_MOD, r.label, 0)
        flip = _synthetic(rng, r, SampleKind.SENTIMENT_MOD, other, 1)
        added = _synthetic(rng, r, SampleKind.ASPECT_ADDITION, r.label, 0)
        if cfg.adversarial:
            rewrite = _synthetic(rng, r, SampleKind.BACKGROUND_REWRITE, r.label, 0)
            batch.paired[r.id] = [flip, rewrite]
        if cfg.contrastive:
            batch.contrast[r.id] = {"ita#o": ([same], [flip]), "ita#s": ([same], [flip]),
                                    "itr#o": ([same], [added]), "itr#s": ([same], [added])}
    return batch


@dataclass
class GroupError:
    group: str
    rel_error: float


def check_model(seed: int, regime: str = "e", config: ModelConfig | None = None,
                share_weights: bool = True) -> list[GroupError]:
    """Directional-derivative check of every parameter group for one random draw."""
    rng = np.random.default_rng([seed, REGIMES.index(regime)])
    batch = random_batch(rng, regime)
    config = config or tiny_config()
    vocab = Vocab(WORDS)
    cfg = TrainConfig(regime=regime, seed=seed, share_weights=share_weights,
                      lambda_a=float(rng.uniform(0.1, 1.0)), mu=float(rng.uniform(0.2, 1.0)),
                      disc_hidden=4)
    model = AbsaModel(config, vocab, seed=seed)
    model_s = None
    if not share_weights:
        model_s = AbsaModel(config, vocab, seed=seed + 1)
    disc = None
    if cfg.adversarial:
        d_adv = config.d_model + 2 * (config.d_final - config.d_model)
        disc = Discriminator(4 * d_adv, cfg.disc_hidden, seed)
    objective = Objective(cfg, model, model_s, disc)
    params = objective.params()
    step = 1 + int(rng.integers(1000))

    with Tape() as tape:
        loss = objective(batch, step)
    grads = backward(tape, loss.graph, list(params.values()))

    def value(sign):
        return float(objective(batch, step, adv_sign=sign).graph.data)

    out = []
    for name, tensor in params.items():
        # reversed gradients reach the encoders; the discriminator sees its own loss
        sign = None
        if cfg.adversarial:
            sign = 1.0 if name.startswith("disc.") else -cfg.lambda_a
        u = rng.normal(size=tensor.data.shape)
        analytic = float(np.sum(grads[tensor] * u))
        base = tensor.data.copy()
        tensor.data = base + STEP * u
        hi = value(sign)
        tensor.data = base - STEP * u
        lo = value(sign)
        tensor.data = base
        numeric = (hi - lo) / (2 * STEP)
        out.append(GroupError(name, relative_error(np.array([analytic]), np.array([numeric]), FLOOR)))
    return out


def check_model_seeds(seeds: int = 100, regime: str = "e", tolerance: float = TOLERANCE,
                      first_seed: int = 0) -> list[CheckResult]:
    worst: dict[str, float] = {}
    for s in range(first_seed, first_seed + seeds):
        for g in check_model(s, regime):
            worst[g.group] = max(worst.get(g.group, 0.0), g.rel_error)
    return [CheckResult(f"model[{regime}] {name}", seeds, err, tolerance) for name, err in worst.items()]


@dataclass
class SuiteResult:
    rows: list
    seconds: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def table(self) -> str:
        lines = [f"{'check':<44} {'seeds':>5} {'max_rel_err':>12} {'tol':>8}  result"]
        for r in self.rows:
            lines.append(f"{r.name:<44} {r.seeds:>5} {r.max_rel_error:>12.3e} {r.tolerance:>8.0e}  "
                         f"{'pass' if r.passed else 'FAIL'}")
        lines.append(f"{sum(r.passed for r in self.rows)}/{len(self.rows)} passed in {self.seconds:.1f}s")
        return "\n".join(lines) + "\n"


def run_suite(op_seeds: int = 100, model_seeds: int = 100, regime_seeds: int = 0) -> SuiteResult:
    """All op checks plus model checks; `regime_seeds` > 0 also covers the other regimes."""
    t0 = time.perf_counter()
    rows = list(check_ops(op_seeds))
    rows += check_model_seeds(model_seeds, "e")
    if regime_seeds:
        for regime in REGIMES[1:]:
            rows += check_model_seeds(regime_seeds, regime)
    return SuiteResult(rows, time.perf_counter() - t0)
