import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robabsa.autodiff import Tensor, ops
from robabsa.corpus import AspectSpan, Polarity, tree_from_heads
from robabsa.model import AbsaModel, LabelIndex, ModelConfig, Vocab, adjacency, argmax
from robabsa.model.vocab import UNK

from conftest import make_instance, random_heads

CFG = ModelConfig(d_model=8, n_transformer_layers=1, n_heads=2, d_ff=16, d_gcn=8, n_gcn_layers=2,
                  d_label_embedding=4)


@pytest.fixture(scope="module")
def model(toy):
    vocab = Vocab.build(i.tree for i in toy.train + toy.dev + toy.test)
    return AbsaModel(CFG, vocab, LabelIndex(toy.labels), seed=3)


def dense_loop_layer(model, layer, r_prev, b, rel, r_asp):
    """Scalar-loop reference for one syntax-fusion layer."""
    p = {k: t.data for k, t in model.params.items()}
    table, wa, ba, wb = p["emb.label"], p[f"gcn{layer}.Wa"], p[f"gcn{layer}.ba"], p[f"gcn{layer}.wb"]
    n, d_out = len(r_prev), wa.shape[1]
    out = [[0.0] * d_out for _ in range(n)]
    for i in range(n):
        feats = [list(r_prev[j]) + list(table[rel[i][j]]) + list(r_asp) for j in range(n)]
        scores = [sum(w * f for w, f in zip(wb, feats[j])) for j in range(n)]
        top = max(scores[j] for j in range(n) if b[i][j])
        e = [math.exp(scores[j] - top) if b[i][j] else 0.0 for j in range(n)]
        alpha = [x / sum(e) for x in e]
        for d in range(d_out):
            acc = 0.0
            for j in range(n):
                msg = ba[d] + sum(f * wa[k][d] for k, f in enumerate(feats[j]))
                acc += alpha[j] * msg
            out[i][d] = max(acc, 0.0)
    return np.array(out)


def test_usgcn_matches_dense_loop(model, toy):
    checked = 0
    for inst in toy.train + toy.dev + toy.test:
        if len(inst.tree) > 6:
            continue
        _, r, r_asp = model.encode_base(inst)
        b, rel = adjacency(inst.tree, model.labels)
        for layer in range(CFG.n_gcn_layers):
            fast = model.usgcn_layer(r, b, rel, r_asp, layer)
            slow = dense_loop_layer(model, layer, r.data, b, rel, r_asp.data)
            assert np.max(np.abs(fast.data - slow)) <= 1e-10
            r = fast
        checked += 1
    assert checked >= 20


def test_usgcn_shape(model):
    rng = np.random.default_rng(0)
    inst = make_instance(["the", "food", "is", "good"], [2, 4, 4, 0], ["det", "nsubj", "cop", "root"], (2, 3))
    b, rel = adjacency(inst.tree, model.labels)
    out = model.usgcn_layer(Tensor(rng.normal(size=(4, 8))), b, rel, Tensor(rng.normal(size=8)), 0)
    assert out.shape == (4, 8)


def test_alpha_mask_on_random_graphs(model):
    rng = np.random.default_rng(42)
    names = model.labels.labels
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        heads = random_heads(rng, n)
        labels = ["root" if h == 0 else names[int(rng.integers(len(names)))] for h in heads]
        tree = tree_from_heads(["w"] * n, heads, labels)
        b, rel = adjacency(tree, model.labels)
        assert np.array_equal(b, b.T) and b.diagonal().all()
        assert np.all(rel[~b] == LabelIndex.NONE) and np.all(rel.diagonal() == LabelIndex.SELF)
        alphas = []
        model.usgcn_layer(Tensor(rng.normal(size=(n, 8))), b, rel, Tensor(rng.normal(size=8)),
                          int(rng.integers(2)), alpha_out=alphas)
        alpha = alphas[0]
        assert np.all(alpha[~b] == 0.0)
        assert np.all(np.abs(alpha.sum(axis=1) - 1.0) <= 1e-9)


def test_direction_has_distinct_ids(model):
    tree = tree_from_heads(["a", "b"], [2, 0], ["amod", "root"])
    _, rel = adjacency(tree, model.labels)
    assert rel[1, 0] == model.labels.id("amod", governs=True)
    assert rel[0, 1] == model.labels.id("amod", governs=False)
    assert rel[0, 1] != rel[1, 0]


def test_label_sensitivity(toy):
    vocab = Vocab.build(i.tree for i in toy.train)
    inst = toy.train[0]
    b, rel = adjacency(inst.tree, LabelIndex(toy.labels))
    i, j = np.argwhere(b & ~np.eye(len(b), dtype=bool))[0]
    changed = 0
    for seed in range(20):
        m = AbsaModel(CFG, vocab, LabelIndex(toy.labels), seed=seed)
        _, r, r_asp = m.encode_base(inst)
        other = rel.copy()
        other[i, j] = (rel[i, j] + 2) % len(m.labels)
        a = m.usgcn_layer(r, b, rel, r_asp, 0).data
        c = m.usgcn_layer(r, b, other, r_asp, 0).data
        changed += bool(np.any(a != c))
    assert changed >= 19


def test_build_input_layout(model):
    inst = make_instance(["the", "food", "is", "fabulous"], [2, 4, 4, 0], ["det", "nsubj", "cop", "root"], (2, 3))
    enc = model.build_input(inst)
    assert len(enc.ids) == 8 and enc.n == 4 and list(enc.aspect) == [6]
    two = make_instance(["the", "fried", "rice", "zzz"], [3, 3, 4, 0], ["det", "amod", "nsubj", "root"], (2, 4))
    enc2 = model.build_input(two)
    assert len(enc2.ids) == 4 + 2 + 3
    assert enc2.ids[4] == model.vocab.index[UNK]
    assert enc2.segments.tolist() == [0, 0, 1, 1, 0, 0, 1, 1, 1]


def test_attention_rows_and_single_token(model):
    inst = make_instance(["food"], [0], ["root"], (1, 2))
    keep = []
    fw = model.forward(inst, keep=keep)
    for w in keep:
        np.testing.assert_allclose(w.sum(axis=-1), 1.0, atol=1e-12)
    assert fw.beta.data.tolist() == [1.0]


def test_permutation_equivariance(toy):
    vocab = Vocab.build(i.tree for i in toy.train)
    m = AbsaModel(dataclasses.replace(CFG, mark_aspect=False), vocab, seed=1)
    m.params["emb.pos"].data[:] = 0.0
    inst = make_instance(["the", "sushi", "is", "lovely"], [2, 4, 4, 0], ["det", "nsubj", "cop", "root"], (2, 3))
    swapped = dataclasses.replace(inst, tree=inst.tree.with_forms(["is", "sushi", "the", "lovely"]))
    h1, s1, a1 = m.encode_base(inst)
    h2, s2, a2 = m.encode_base(swapped)
    np.testing.assert_allclose(s2.data, s1.data[[2, 1, 0, 3]], atol=1e-12)
    np.testing.assert_allclose(h2.data, h1.data, atol=1e-12)
    np.testing.assert_allclose(a2.data, a1.data, atol=1e-12)


def test_aggregate_uniform_and_width(model):
    r = Tensor(np.tile(np.arange(8.0), (5, 1)))
    r_a, beta, r_f = model.aggregate(r, Tensor(np.ones(8)), Tensor(np.zeros(8)))
    np.testing.assert_allclose(beta.data, 0.2, atol=1e-15)
    assert r_f.shape == (CFG.d_gcn + CFG.d_model,)


def test_argmax_tie_break_and_shift():
    assert argmax([1 / 3] * 3) == int(Polarity.POSITIVE)
    assert argmax([0.2, 0.4, 0.4]) == int(Polarity.NEGATIVE)
    p = ops.softmax(Tensor(np.zeros(3))).data
    np.testing.assert_allclose(p, 1 / 3)
    x = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(ops.softmax(Tensor(x + 7.5)).data, ops.softmax(Tensor(x)).data, atol=1e-15)


@given(st.integers(0, 10 ** 6), st.floats(0.01, 100))
def test_argmax_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    w, r = rng.normal(size=(12, 3)), rng.normal(size=12)
    assert argmax(r @ w) == argmax((c * r) @ w)


def test_prediction_invariants(model, toy):
    for inst in toy.test:
        pred = model.predict(inst)
        assert abs(pred.probs.sum() - 1) <= 1e-9 and abs(pred.beta.sum() - 1) <= 1e-9
        assert len(pred.beta) == len(inst.tree)
        np.testing.assert_array_equal(pred.r_adv, np.concatenate([pred.r_cls, pred.r_a, pred.r_s]))
        np.testing.assert_array_equal(pred.r_f, np.concatenate([pred.r_a, pred.r_cls]))


def test_no_syntax_layers(toy):
    vocab = Vocab.build(i.tree for i in toy.train)
    m = AbsaModel(dataclasses.replace(CFG, n_gcn_layers=0), vocab, seed=0)
    assert not any(k.startswith("gcn") or k == "emb.label" for k in m.params)
    pred = m.predict(toy.train[0])
    assert pred.r_f.shape == (2 * CFG.d_model,)


def test_deterministic_prediction(toy):
    vocab = Vocab.build(i.tree for i in toy.train)
    a = AbsaModel(CFG, vocab, seed=5).predict(toy.train[3])
    b = AbsaModel(CFG, vocab, seed=5).predict(toy.train[3])
    assert a.probs.tobytes() == b.probs.tobytes() and a.r_adv.tobytes() == b.r_adv.tobytes()


def test_config_checks():
    with pytest.raises(ValueError):
        ModelConfig(d_model=10, n_heads=4)
    with pytest.raises(ValueError):
        ModelConfig(n_gcn_layers=-1)


def test_save_load_roundtrip(model, toy, tmp_path):
    model.save(tmp_path)
    back = AbsaModel.load(tmp_path)
    assert back.config == model.config
    for inst in toy.dev[:4]:
        assert back.predict(inst).probs.tobytes() == model.predict(inst).probs.tobytes()


def test_word_vectors(toy):
    vocab = Vocab.build(i.tree for i in toy.train)
    m = AbsaModel(CFG, vocab, seed=0)
    assert m.load_word_vectors({"sushi": np.arange(8.0), "zzzz": np.ones(8)}) == 1
    assert m.params["emb.word"].data[vocab.index["sushi"]].tolist() == list(np.arange(8.0))
    with pytest.raises(ValueError):
        m.load_word_vectors({"sushi": np.ones(3)})


def test_empty_aspect_rejected():
    from robabsa.corpus import CorpusError
    inst = make_instance(["food"], [0], ["root"], (1, 2))
    with pytest.raises(CorpusError):
        dataclasses.replace(inst, aspect=AspectSpan(1, 1))
