import pytest

from robabsa.corpus import Polarity
from robabsa.lexicon import (DEFAULT_NEGATIONS, LexiconError, RelationLexicon, candidates_for,
                             load_negations, load_relation_lexicon, load_sentiment_lexicon)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_sentiment_row(tmp_path):
    lex = load_sentiment_lexicon(write(tmp_path, "s.tsv", "fabulous\tADJ\t0.875\t0.125\t0.0\n"))
    e = lex.lookup("fabulous", "ADJ")
    assert e.scores == {Polarity.POSITIVE: 0.875, Polarity.NEUTRAL: 0.125, Polarity.NEGATIVE: 0.0}
    assert lex.lookup("Fabulous") is e          # word-only fallback, case-folded
    assert lex.lookup("absent") is None


def test_score_out_of_range(tmp_path):
    with pytest.raises(LexiconError, match="outside"):
        load_sentiment_lexicon(write(tmp_path, "s.tsv", "odd\tADJ\t1.2\t0\t0\n"))


def test_duplicates_averaged_and_counted(tmp_path):
    lex = load_sentiment_lexicon(write(tmp_path, "s.tsv", "good\tADJ\t1\t0\t0\ngood\tADJ\t0.5\t0.5\t0\n"))
    assert lex.duplicates == 1
    assert lex.lookup("good", "ADJ")[Polarity.POSITIVE] == 0.75


PAPER_REL = "difficult\tADJ\tsynonym\thard\ndifficult\tADJ\tsynonym\ttough\n" \
            "difficult\tADJ\tantonym\teasy\ndifficult\tADJ\tantonym\tsimple\n"


def test_candidates(tmp_path):
    lex = load_relation_lexicon(write(tmp_path, "r.tsv", PAPER_REL))
    assert candidates_for("difficult", "ADJ", "antonym", lex) == ["easy", "simple"]
    assert candidates_for("difficult", "ADJ", "synonym", lex) == ["hard", "tough"]
    assert candidates_for("absent", "ADJ", "synonym", lex) == []


def test_synonym_antonym_conflict():
    lex = RelationLexicon()
    lex.add("good", "ADJ", "synonym", "fine")
    with pytest.raises(LexiconError):
        lex.add("good", "ADJ", "antonym", "fine")
    lex.add("good", "ADJ", "synonym", "good")     # self-relations are dropped
    assert candidates_for("good", "ADJ", "synonym", lex) == ["fine"]


def test_negations(tmp_path):
    assert load_negations(write(tmp_path, "n.txt", "not\nnever\n")) == ("not", "never")
    with pytest.raises(LexiconError):
        load_negations(write(tmp_path, "e.txt", "\n"))
    assert DEFAULT_NEGATIONS == ("not", "n't", "never")


def test_toy_lexicon_scores_in_range(toy):
    for entry in toy.lexicons.sentiment:
        assert all(0.0 <= v <= 1.0 for v in entry.scores.values())
    for (word, upos), slot in toy.lexicons.relations.entries.items():
        for rel in ("synonym", "antonym"):
            assert word not in candidates_for(word, upos, rel, toy.lexicons.relations)
        assert not set(slot["synonym"]) & set(slot["antonym"])
