"""One test per acceptance criterion; each records a PASS/FAIL line for the run summary."""

import time
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE, TINY_TRAIN, make_instance, random_heads, run_cli
from test_augment import PAPER_LINKS
from test_model import CFG, dense_loop_layer
from robabsa.augment import (OpinionLink, SampleKind, StubParaphraser, addition_confidence,
                             build_synthetic, locate_opinions, meteor, modification_confidence)
from robabsa.autodiff import Tensor
from robabsa.corpus import AspectSpan, Polarity, tree_from_heads
from robabsa.gradcheck import run_suite
from robabsa.model import AbsaModel, LabelIndex, ModelConfig, Vocab, adjacency
from robabsa.probes import adversarial_probe, contrastive_probe, syntax_probe
from robabsa.training import TrainConfig, accuracy, train


def record(key, name, ok, detail):
    ACCEPTANCE[key] = (name, bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  {key}. {name}: {detail}")
    assert ok, detail


def test_1_gradient_suite():
    result = run_suite(op_seeds=100, model_seeds=100)
    ops = [r for r in result.rows if not r.name.startswith("model")]
    model = [r for r in result.rows if r.name.startswith("model")]
    worst_op = max(r.max_rel_error for r in ops)
    worst_model = max(r.max_rel_error for r in model)
    ok = worst_op < 1e-4 and worst_model < 1e-3 and result.seconds < 60 and all(r.seeds >= 100 for r in result.rows)
    record(1, "gradient suite", ok, f"{len(ops)} op checks max {worst_op:.2e}, {len(model)} parameter groups "
           f"max {worst_model:.2e}, 100 seeds, {result.seconds:.1f}s")


def test_2_usgcn_oracle(toy):
    vocab = Vocab.build(i.tree for i in toy.train + toy.dev + toy.test)
    model = AbsaModel(CFG, vocab, LabelIndex(toy.labels), seed=3)
    worst, checked = 0.0, 0
    for inst in toy.train + toy.dev + toy.test:
        if len(inst.tree) > 6:
            continue
        _, r, r_asp = model.encode_base(inst)
        b, rel = adjacency(inst.tree, model.labels)
        for layer in range(CFG.n_gcn_layers):
            fast = model.usgcn_layer(r, b, rel, r_asp, layer)
            worst = max(worst, float(np.max(np.abs(fast.data - dense_loop_layer(model, layer, r.data, b, rel,
                                                                                     r_asp.data)))))
            r = fast
        checked += 1
    rng = np.random.default_rng(2024)
    bad = 0
    names = model.labels.labels
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        heads = random_heads(rng, n)
        labels = ["root" if h == 0 else names[int(rng.integers(len(names)))] for h in heads]
        b, rel = adjacency(tree_from_heads(["w"] * n, heads, labels), model.labels)
        alphas = []
        model.usgcn_layer(Tensor(rng.normal(size=(n, CFG.d_model))), b, rel, Tensor(rng.normal(size=CFG.d_model)),
                          0, alpha_out=alphas)
        a = alphas[0]
        bad += not (np.all(a[~b] == 0.0) and np.all(np.abs(a.sum(axis=1) - 1.0) <= 1e-9) and np.all(a >= 0))
    ok = checked > 0 and worst <= 1e-10 and bad == 0
    record(2, "USGCN oracle", ok, f"{checked} instances max |diff| {worst:.1e}; mask/normalisation violations "
           f"on 1000 graphs: {bad}")


def test_3_formula_oracles():
    P, N, U = Polarity.POSITIVE, Polarity.NEGATIVE, Polarity.NEUTRAL
    got = [modification_confidence(0.8, {P: 0.1, U: 0.2, N: 0.7}, N),
           modification_confidence(0.5, {P: 0.5, U: 0.25, N: 0.25}, P),
           addition_confidence([0.9, 0.8]),
           meteor("a b c d".split(), "a b c d".split()),
           meteor("a b d c".split(), "a b c d".split())]
    want = [11.2 / 3, 1.0, 0.85, 0.9921875, 0.7890625]
    err = max(abs(g - w) for g, w in zip(got, want))
    record(3, "formula oracles", err <= 1e-9, "values " + ", ".join(f"{g:.10g}" for g in got) + f"; max err {err:.1e}")


def test_4_generator_properties(toy):
    result = build_synthetic(toy.train, toy.lexicons, toy.embedder(), paraphraser=StubParaphraser(toy.lexicons.relations))
    raw = {i.id: i for i in toy.train}
    gates = {SampleKind.SENTIMENT_MOD: lambda c: c >= 0.2, SampleKind.BACKGROUND_REWRITE: lambda c: c >= 0.25,
             SampleKind.ASPECT_ADDITION: lambda c: c > 0.85}
    samples = result.all()
    thresholds = sum(gates[s.kind](s.confidence) for s in samples)
    flips = [s for s in result.samples[SampleKind.SENTIMENT_MOD] if s.flipped]
    flipped_ok = sum(s.label != raw[s.source_id].label for s in flips)
    kept = result.samples[SampleKind.BACKGROUND_REWRITE] + result.samples[SampleKind.ASPECT_ADDITION]
    aspect_ok = sum(s.aspect_forms == raw[s.source_id].aspect_forms for s in kept)
    links_ok = sum(locate_opinions(make_instance(f, h, l, sp)) == [OpinionLink(AspectSpan(*sp), frozenset(o), r)]
                   for f, h, l, sp, o, r in PAPER_LINKS)
    ok = (samples and flips and kept and thresholds == len(samples) and flipped_ok == len(flips)
          and aspect_ok == len(kept) and links_ok == 4)
    record(4, "generator properties", ok, f"thresholds {thresholds}/{len(samples)}, flips {flipped_ok}/{len(flips)}, "
           f"aspect forms {aspect_ok}/{len(kept)}, opinion links {links_ok}/4")


def test_5_overfit(toy):
    t0 = time.perf_counter()
    data = toy.train[:64]
    config = ModelConfig(d_model=32, n_transformer_layers=1, n_heads=2, d_ff=64, d_gcn=16, n_gcn_layers=2,
                         d_label_embedding=8)
    model = AbsaModel(config, Vocab.build(i.tree for i in data), seed=0)
    result = train(TrainConfig(lr=3e-3, max_epochs=200, target_train_accuracy=0.99, seed=0), model, data)
    acc = accuracy(result.model, data)
    seconds = time.perf_counter() - t0
    ok = len(data) == 64 and acc >= 0.99 and result.epochs_run <= 200 and seconds < 120
    record(5, "overfit sanity", ok, f"train accuracy {acc:.3f} after {result.epochs_run} epochs, {seconds:.1f}s")


def test_6_adversarial_direction(toy):
    probe = adversarial_probe(toy=toy)
    a0, a6 = probe.accuracy[0.0], probe.accuracy[0.6]
    record(6, "adversarial direction", a6 <= a0, f"held-out type accuracy {a6:.3f} at 0.6 vs {a0:.3f} at 0 "
           f"(mean of seeds 0-2)")


def test_7_contrastive_direction(toy):
    pos, neg = contrastive_probe(seed=0, toy=toy)
    record(7, "contrastive direction", pos > neg, f"mean r_f cosine positive {pos:.4f} vs negative {neg:.4f}")


def test_8_syntax_trend(toy):
    acc = syntax_probe(rates=(0.0, 0.5, 1.0), seeds=range(5), toy=toy)
    values = [acc[r] for r in (0.0, 0.5, 1.0)]
    ok = all(a >= b for a, b in zip(values, values[1:]))
    record(8, "syntax-quality trend", ok, "dev accuracy " + ", ".join(f"{r}: {acc[r]:.3f}" for r in acc))


def _tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv("ROBABSA_CONFIG", raising=False)
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY_TRAIN.replace("figures = false", "figures = true"))
    runs = []
    for k in range(2):
        aug, tr = tmp_path / f"aug{k}", tmp_path / f"train{k}"
        codes = (run_cli("augment", "--config", cfg, "--out", aug, "--seed", 11),
                 run_cli("train", "--config", cfg, "--synthetic", aug, "--regime", "a+c", "--seed", 11,
                         "--out", tr))
        runs.append((codes, _tree_bytes(aug), _tree_bytes(tr)))
    (c0, a0, t0), (c1, a1, t1) = runs
    same_aug = a0 == a1 and len(a0) > 0
    same_train = t0 == t1 and any(k.startswith("checkpoint") for k in t0)
    ok = c0 == c1 == (0, 0) and same_aug and same_train
    record(9, "determinism", ok, f"augment {len(a0)} files identical: {same_aug}; train {len(t0)} files "
           f"identical: {same_train}")
