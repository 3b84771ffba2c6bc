import json
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_instance
from robabsa.corpus import Polarity
from robabsa.evaluation import dump_representations, evaluate, faithfulness_deviation, write_report
from robabsa.model import AbsaModel
from robabsa.probes import small_config, toy_vocab

FORMS = ["the", "food", "was", "good"]
HEADS = [2, 3, 0, 3]
LABELS = ["det", "nsubj", "root", "xcomp"]


@dataclass
class FixedPrediction:
    label: Polarity
    beta: np.ndarray


class FixedModel:
    """Answers from a lookup table keyed by instance id."""

    def __init__(self, answers, beta=None):
        self.answers = answers
        self.beta = beta if beta is not None else np.full(4, 0.25)

    def predict(self, inst):
        return FixedPrediction(self.answers[inst.id], self.beta)


def inst(name, label, tags=(), opinion=None):
    return make_instance(FORMS, HEADS, LABELS, (2, 3), label=label, name=name,
                         subset_tags=frozenset(tags), gold_opinion=opinion)


def test_three_of_four_correct():
    P = Polarity
    corpus = [inst("a", P.POSITIVE, ["revtgt"]), inst("b", P.NEGATIVE, ["revtgt"]),
              inst("c", P.NEUTRAL), inst("d", P.POSITIVE, ["addtgt"])]
    model = FixedModel({"a": P.POSITIVE, "b": P.POSITIVE, "c": P.NEUTRAL, "d": P.POSITIVE})
    r = evaluate(model, corpus)
    assert r.accuracy == 0.75 and (r.correct, r.total) == (3, 4)
    assert r.tags == {"revtgt": (1, 2), "addtgt": (1, 1)}
    assert r.confusion[int(P.NEGATIVE), int(P.POSITIVE)] == 1


def test_constant_prediction_scores_class_share():
    corpus = [inst(str(k), Polarity(k % 3)) for k in range(9)]
    r = evaluate(FixedModel({str(k): Polarity.NEUTRAL for k in range(9)}), corpus)
    share = sum(i.label is Polarity.NEUTRAL for i in corpus) / 9
    assert r.accuracy == pytest.approx(share)


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=30))
def test_confusion_marginals(pairs):
    corpus = [inst(str(k), Polarity(g)) for k, (g, _) in enumerate(pairs)]
    r = evaluate(FixedModel({str(k): Polarity(p) for k, (_, p) in enumerate(pairs)}), corpus)
    assert r.confusion.sum() == len(pairs)
    for c in range(3):
        assert r.confusion[c].sum() == sum(g == c for g, _ in pairs)
        assert r.confusion[:, c].sum() == sum(p == c for _, p in pairs)
    assert r.correct == sum(g == p for g, p in pairs)


def test_faithfulness_examples():
    beta = np.array([0.1, 0.2, 0.3, 0.4])
    assert faithfulness_deviation(beta, {4}) == pytest.approx(0.6)
    assert faithfulness_deviation(beta, {1, 2, 3, 4}) == pytest.approx(0.0)
    assert faithfulness_deviation(beta, None) is None
    assert faithfulness_deviation(beta, frozenset()) is None


@given(st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4), st.sets(st.integers(1, 4), min_size=1))
def test_faithfulness_bounded(weights, opinion):
    beta = np.array(weights) / sum(weights)
    assert 0.0 <= faithfulness_deviation(beta, opinion) <= 1.0


def test_faithfulness_averages_only_annotated():
    corpus = [inst("a", Polarity.POSITIVE, opinion=frozenset({4})), inst("b", Polarity.POSITIVE)]
    beta = np.array([0.0, 0.0, 0.5, 0.5])
    r = evaluate(FixedModel({"a": Polarity.POSITIVE, "b": Polarity.POSITIVE}, beta), corpus)
    assert r.faithfulness == pytest.approx(0.5) and r.faithfulness_count == 1


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        evaluate(FixedModel({}), [])


def test_report_text_and_json(tmp_path):
    corpus = [inst("a", Polarity.POSITIVE, ["revtgt", "revnon"]), inst("b", Polarity.NEGATIVE, ["addtgt"])]
    r = evaluate(FixedModel({"a": Polarity.POSITIVE, "b": Polarity.POSITIVE}), corpus)
    text, record = write_report(r, tmp_path)
    body = text.read_text().splitlines()
    for tag in ("revtgt", "revnon", "addtgt"):
        assert sum(line.split()[0] == tag for line in body if line.strip()) == 1
    data = json.loads(record.read_text())
    assert data["accuracy"] == 0.5 and data["tags"]["addtgt"]["correct"] == 0


@pytest.fixture(scope="module")
def model(toy):
    return AbsaModel(small_config(), toy_vocab(toy), seed=0)


@pytest.mark.parametrize("which, width", [("r_f", 24), ("r_s", 8), ("r_adv", 32)])
def test_dump_shape(model, toy, tmp_path, which, width):
    path = dump_representations(model, toy.test[:5], which, tmp_path / "d.tsv")
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    assert rows[0][:3] == ["id", "gold", "predicted"] and len(rows) == 6
    assert all(len(row) == 3 + width for row in rows)
    again = dump_representations(model, toy.test[:5], which, tmp_path / "e.tsv")
    assert again.read_bytes() == path.read_bytes()


def test_dump_empty_corpus_is_header_only(model, tmp_path):
    path = dump_representations(model, [], "r_f", tmp_path / "d.tsv")
    assert len(path.read_text().splitlines()) == 1
    with pytest.raises(ValueError):
        dump_representations(model, [], "r_x", tmp_path / "d.tsv")


def test_evaluation_deterministic(model, toy):
    a, b = evaluate(model, toy.test), evaluate(model, toy.test)
    assert a.to_dict() == b.to_dict()
