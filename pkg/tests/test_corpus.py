import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robabsa.corpus import (DEFAULT_LABELS, AspectSpan, CorpusError, Polarity, StructuralError,
                            arc_difference, dump_instances, format_conllu, inject_parse_noise,
                            load_conllu, load_corpus, load_instances, parse_conllu, tree_from_heads,
                            validate_tree)

from conftest import random_heads

TWO = "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tfood\t_\tNOUN\t_\t_\t0\troot\t_\t_\n"


def test_two_token_block(tmp_path):
    p = tmp_path / "a.conllu"
    p.write_text(TWO)
    [tree] = load_conllu(p)
    assert tree.forms == ["the", "food"]
    assert {(a.head, a.dependent, a.label) for a in tree.arcs} == {(2, 1, "det"), (0, 2, "root")}


def test_empty_file(tmp_path):
    p = tmp_path / "e.conllu"
    p.write_text("")
    assert load_conllu(p) == []


def test_double_head_is_structural_error():
    text = TWO + "3\tis\t_\tAUX\t_\t_\t2\tcop\t_\t_\n3\tis\t_\tAUX\t_\t_\t1\tcop\t_\t_\n"
    with pytest.raises(StructuralError):
        parse_conllu(text, DEFAULT_LABELS)


def test_cycle_and_multiroot_rejected():
    cyc = "1\ta\t_\tX\t_\t_\t2\tdep\t_\t_\n2\tb\t_\tX\t_\t_\t1\tdep\t_\t_\n"
    with pytest.raises(StructuralError):
        parse_conllu(cyc, DEFAULT_LABELS)
    two_roots = "1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n2\tb\t_\tX\t_\t_\t0\troot\t_\t_\n"
    with pytest.raises(StructuralError, match="one root"):
        parse_conllu(two_roots, DEFAULT_LABELS)


def test_bad_column_count_names_line():
    with pytest.raises(CorpusError, match="line 2"):
        parse_conllu("1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tfood\t0\troot\n")


def test_label_outside_inventory():
    with pytest.raises(StructuralError, match="inventory"):
        parse_conllu(TWO.replace("det", "weird"), DEFAULT_LABELS)


def _records(tmp_path, lines, conllu=TWO):
    (tmp_path / "t.conllu").write_text(conllu)
    (tmp_path / "r.jsonl").write_text("".join(json.dumps(l) + "\n" for l in lines))
    return tmp_path / "r.jsonl", load_conllu(tmp_path / "t.conllu")


def test_instance_record_maps_fields(tmp_path):
    path, trees = _records(tmp_path, [{"sent": 0, "span": [2, 3], "label": "positive", "tags": ["REVTGT"]}])
    [inst] = load_instances(path, trees)
    assert inst.aspect_text == "food"
    assert inst.label is Polarity.POSITIVE
    assert inst.subset_tags == {"REVTGT"}


@pytest.mark.parametrize("rec, msg", [
    ({"sent": 0, "span": [5, 6], "label": "positive"}, "span"),
    ({"sent": 0, "span": [2, 3], "label": "great"}, "polarity|malformed"),
    ({"sent": 3, "span": [2, 3], "label": "positive"}, "out of range"),
])
def test_record_errors(tmp_path, rec, msg):
    path, trees = _records(tmp_path, [rec])
    with pytest.raises(CorpusError, match=msg):
        load_instances(path, trees)


def test_toy_corpus_roundtrip(tmp_path, toy):
    dump_instances(toy.train, tmp_path / "i.jsonl", tmp_path / "t.conllu")
    again = load_corpus(tmp_path / "i.jsonl", tmp_path / "t.conllu", toy.labels)
    assert [(i.id, i.tree.forms, i.aspect, i.label, i.subset_tags, i.gold_opinion) for i in again] == \
           [(i.id, i.tree.forms, i.aspect, i.label, i.subset_tags, i.gold_opinion) for i in toy.train]
    assert format_conllu(i.tree for i in again[:5]) == format_conllu(i.tree for i in toy.train[:5])


trees = st.integers(1, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2 ** 32 - 1)))


def _tree(n, seed):
    rng = np.random.default_rng(seed)
    heads = random_heads(rng, n)
    labels = ["root" if h == 0 else DEFAULT_LABELS[int(rng.integers(len(DEFAULT_LABELS)))] for h in heads]
    return tree_from_heads([f"w{i}" for i in range(n)], heads, labels)


@given(trees)
def test_serialisation_roundtrip(nt):
    tree = _tree(*nt)
    [back] = parse_conllu(format_conllu([tree]), DEFAULT_LABELS)
    assert back.forms == tree.forms
    assert set(back.arcs) == set(tree.arcs)


@given(trees, st.sampled_from([0.0, 0.3, 0.5, 1.0]), st.integers(0, 10 ** 6))
def test_noise_keeps_tree_valid_and_counts_arcs(nt, rate, seed):
    tree = _tree(*nt)
    noisy = inject_parse_noise(tree, rate, seed)
    validate_tree(noisy, DEFAULT_LABELS)
    assert arc_difference(tree, noisy) == int(round(rate * len(tree)))
    assert noisy == inject_parse_noise(tree, rate, seed)


def test_noise_examples():
    tree = _tree(10, 7)
    assert inject_parse_noise(tree, 0.0, 3) is tree
    assert arc_difference(tree, inject_parse_noise(tree, 0.3, 3)) == 3
    with pytest.raises(ValueError):
        inject_parse_noise(tree, 1.5, 0)


def test_aspect_span_bounds():
    with pytest.raises(CorpusError):
        AspectSpan(3, 3).check(4)
    AspectSpan(1, 5).check(4)
