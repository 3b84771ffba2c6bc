"""Regenerate the bundled toy corpus under src/robabsa/data/toy.

The sentences come from a handful of restaurant-review frames with
hand-picked fillers; parses are written directly in the frame so the
output needs no parser.  Run from the repository root:

    python3 scripts/make_toy.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from robabsa.corpus import DEFAULT_LABELS, tree_from_heads, format_conllu

OUT = Path(__file__).resolve().parents[1] / "src" / "robabsa" / "data" / "toy"

FOOD = ["pasta", "pizza", "sushi", "soup", "bread", "dessert", "coffee", "wine", "beer", "steak"]
PLACE = ["service", "staff", "waiter", "music", "decor", "atmosphere", "view", "room", "price", "menu"]
POS = ["great", "delicious", "fabulous", "excellent", "tasty", "friendly", "lovely", "fresh", "good", "reasonable"]
NEG = ["terrible", "awful", "bland", "rude", "bad", "stale", "dirty", "slow", "small", "expensive"]
NEU = ["average", "ordinary"]
POS_V = ["love", "enjoy", "like"]
NEG_V = ["hate", "dislike"]

# word -> (positive, neutral, negative)
SCORES = {
    "great": (0.75, 0.25, 0.0), "delicious": (0.875, 0.125, 0.0), "fabulous": (0.75, 0.125, 0.125),
    "excellent": (0.875, 0.125, 0.0), "tasty": (0.625, 0.375, 0.0), "friendly": (0.625, 0.25, 0.125),
    "lovely": (0.75, 0.25, 0.0), "fresh": (0.5, 0.375, 0.125), "good": (0.625, 0.25, 0.125),
    "reasonable": (0.5, 0.375, 0.125), "fine": (0.5, 0.375, 0.125), "quick": (0.5, 0.375, 0.125),
    "terrible": (0.0, 0.125, 0.875), "awful": (0.0, 0.125, 0.875), "bland": (0.0, 0.375, 0.625),
    "rude": (0.0, 0.25, 0.75), "bad": (0.0, 0.25, 0.75), "stale": (0.125, 0.25, 0.625),
    "dirty": (0.0, 0.25, 0.75), "slow": (0.125, 0.375, 0.5), "small": (0.125, 0.375, 0.5),
    "expensive": (0.125, 0.25, 0.625), "poor": (0.0, 0.25, 0.75), "spicy": (0.25, 0.5, 0.25),
    "average": (0.125, 0.75, 0.125), "ordinary": (0.125, 0.75, 0.125), "typical": (0.125, 0.75, 0.125),
    "big": (0.25, 0.625, 0.125), "large": (0.25, 0.625, 0.125),
}
VERB_SCORES = {
    "love": (0.875, 0.125, 0.0), "enjoy": (0.75, 0.25, 0.0), "like": (0.625, 0.375, 0.0),
    "adore": (0.875, 0.125, 0.0), "hate": (0.0, 0.125, 0.875), "dislike": (0.0, 0.25, 0.75),
    "try": (0.125, 0.75, 0.125), "ordered": (0.0, 0.875, 0.125), "order": (0.0, 0.875, 0.125),
    "serve": (0.125, 0.75, 0.125),
}
SYN = [("great", "excellent"), ("great", "fabulous"), ("excellent", "fabulous"), ("delicious", "tasty"),
       ("good", "fine"), ("lovely", "great"), ("terrible", "awful"), ("bad", "poor"), ("slow", "sluggish"),
       ("rude", "bad"), ("dirty", "poor"), ("average", "ordinary"), ("ordinary", "typical"),
       ("small", "little"), ("love", "adore"), ("love", "enjoy"), ("hate", "dislike"), ("big", "large")]
ANT = [("great", "terrible"), ("excellent", "awful"), ("fabulous", "awful"), ("delicious", "bland"),
       ("tasty", "bland"), ("friendly", "rude"), ("fresh", "stale"), ("good", "bad"), ("lovely", "dirty"),
       ("reasonable", "expensive"), ("slow", "quick"), ("small", "big"), ("love", "hate"),
       ("like", "dislike"), ("enjoy", "hate")]


def frame_copula(a, j):
    return (["The", a, "is", j, "."], [2, 4, 4, 0, 4], ["det", "nsubj", "cop", "root", "punct"],
            ["DET", "NOUN", "AUX", "ADJ", "PUNCT"], [(2, 3, {4})])


def frame_amod(a, j):
    return (["They", "serve", "a", j, a, "."], [2, 0, 5, 5, 2, 2],
            ["nsubj", "root", "det", "amod", "obj", "punct"],
            ["PRON", "VERB", "DET", "ADJ", "NOUN", "PUNCT"], [(5, 6, {4})])


def frame_object(a, v):
    return (["I", v, "the", a, "."], [2, 0, 4, 2, 2], ["nsubj", "root", "det", "obj", "punct"],
            ["PRON", "VERB", "DET", "NOUN", "PUNCT"], [(4, 5, {2})])


def frame_tastes(a, j):
    return (["The", a, "tastes", j, "."], [2, 3, 0, 3, 3], ["det", "nsubj", "root", "xcomp", "punct"],
            ["DET", "NOUN", "VERB", "ADJ", "PUNCT"], [(2, 3, {4})])


def frame_said(a, j, pron="She"):
    return ([pron, "said", "the", a, "was", j, "."], [2, 0, 4, 6, 6, 2, 2],
            ["nsubj", "root", "det", "nsubj", "cop", "ccomp", "punct"],
            ["PRON", "VERB", "DET", "NOUN", "AUX", "ADJ", "PUNCT"], [(4, 5, {6})])


def frame_ordered(a):
    return (["We", "ordered", "the", a, "."], [2, 0, 4, 2, 2], ["nsubj", "root", "det", "obj", "punct"],
            ["PRON", "VERB", "DET", "NOUN", "PUNCT"], [(4, 5, None)])


def frame_try(a):
    return (["I", "will", "try", "this", a, "next", "time", "."], [3, 3, 0, 5, 3, 7, 3, 3],
            ["nsubj", "aux", "root", "det", "obj", "amod", "obl:tmod", "punct"],
            ["PRON", "AUX", "VERB", "DET", "NOUN", "ADJ", "NOUN", "PUNCT"], [(5, 6, None)])


def frame_two(a1, j1, a2, j2, conj="but"):
    return (["The", a1, "is", j1, conj, "the", a2, "is", j2, "."], [2, 4, 4, 0, 9, 7, 9, 9, 4, 4],
            ["det", "nsubj", "cop", "root", "cc", "det", "nsubj", "cop", "conj", "punct"],
            ["DET", "NOUN", "AUX", "ADJ", "CCONJ", "DET", "NOUN", "AUX", "ADJ", "PUNCT"],
            [(2, 3, {4}), (7, 8, {9})])


def polarity(word):
    if word in POS or word in POS_V:
        return "Positive"
    if word in NEG or word in NEG_V:
        return "Negative"
    return "Neutral"


class Split:
    def __init__(self, name):
        self.name, self.trees, self.records = name, [], []

    def add(self, frame, labels, tags=()):
        forms, heads, deps, upos, aspects = frame
        sent = len(self.trees)
        self.trees.append(tree_from_heads(forms, heads, deps, upos, [f.lower() for f in forms]))
        for k, ((start, end, opinion), label) in enumerate(zip(aspects, labels)):
            rec = {"id": f"{self.name}{sent:02d}{'ab'[k] if len(aspects) > 1 else ''}",
                   "sent": sent, "span": [start, end], "label": label, "tags": sorted(tags)}
            if opinion:
                rec["opinion"] = sorted(opinion)
            self.records.append(rec)

    def write(self):
        (OUT / f"{self.name}.conllu").write_text(format_conllu(self.trees), encoding="utf-8")
        (OUT / f"{self.name}.jsonl").write_text(
            "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records), encoding="utf-8")


def build(rng):
    def pick(seq):
        return seq[int(rng.integers(len(seq)))]

    def adj(label):
        return pick({"Positive": POS, "Negative": NEG, "Neutral": NEU}[label])

    train, dev, test = Split("train"), Split("dev"), Split("test")
    cycle = ["Positive", "Negative"] * 20

    # training: 56 sentences, 68 instances
    for k in range(14):
        lab = cycle[k] if k < 12 else "Neutral"
        j = adj(lab)
        train.add(frame_copula(pick(FOOD + PLACE), j), [polarity(j)])
    for k in range(8):
        j = adj(cycle[k])
        train.add(frame_amod(pick(FOOD), j), [polarity(j)])
    for k in range(8):
        v = pick(POS_V if k % 2 == 0 else NEG_V)
        train.add(frame_object(pick(FOOD + PLACE), v), [polarity(v)])
    for k in range(6):
        j = adj(cycle[k])
        train.add(frame_tastes(pick(FOOD), j), [polarity(j)])
    for k in range(4):
        j = adj(cycle[k + 1])
        train.add(frame_said(pick(PLACE), j, "She" if k % 2 else "He"), [polarity(j)])
    for k in range(2):
        train.add(frame_ordered(pick(FOOD)), ["Neutral"])
    train.add(frame_try("restaurant"), ["Neutral"])
    train.add(frame_try(pick(FOOD)), ["Neutral"])
    for k in range(12):
        a1, a2 = rng.choice(FOOD + PLACE, size=2, replace=False)
        j1, j2 = adj(cycle[k]), adj(cycle[k + 1])
        train.add(frame_two(str(a1), j1, str(a2), j2), [polarity(j1), polarity(j2)])

    # dev: 12 sentences, mostly two-aspect so the target binding matters
    for k in range(3):
        j = adj(cycle[k])
        dev.add(frame_copula(pick(FOOD + PLACE), j), [polarity(j)])
    j = adj("Negative")
    dev.add(frame_tastes(pick(FOOD), j), [polarity(j)])
    for k in range(8):
        a1, a2 = rng.choice(FOOD + PLACE, size=2, replace=False)
        j1, j2 = adj(cycle[k]), adj(cycle[k + 1])
        dev.add(frame_two(str(a1), j1, str(a2), j2), [polarity(j1), polarity(j2)])

    # test: 12 sentences built to probe the four robustness subsets
    for k in range(3):
        a = pick(FOOD + PLACE)
        j = adj(cycle[k])
        test.add(frame_copula(a, j), [polarity(j)], {"REVTGT"})
    for k in range(3):
        a1, a2 = rng.choice(FOOD + PLACE, size=2, replace=False)
        j1, j2 = adj(cycle[k]), adj(cycle[k + 1])
        test.add(frame_two(str(a1), j1, str(a2), j2), [polarity(j1), polarity(j2)], {"REVNON"})
    for k in range(3):
        a1, a2 = rng.choice(FOOD + PLACE, size=2, replace=False)
        j1, j2 = adj(cycle[k]), adj(cycle[k + 1])
        test.add(frame_two(str(a1), j1, str(a2), j2, "and"), [polarity(j1), polarity(j2)], {"ADDDIFF"})
    for k in range(3):
        j = adj(cycle[k])
        test.add(frame_said(pick(FOOD + PLACE), j, "He" if k % 2 else "She"), [polarity(j)], {"RWTBG"})
    return train, dev, test


def vectors(rng, dim=12):
    """Crafted vectors: a shared domain direction plus a class direction plus noise."""
    domain = np.ones(dim)
    dirs = {name: rng.normal(size=dim) * 0.8 for name in ("food", "place", "pos", "neg", "neu", "func")}
    words = {}
    for w in FOOD:
        words[w] = domain + dirs["food"]
    for w in PLACE:
        words[w] = domain + dirs["place"]
    for w in list(SCORES) + list(VERB_SCORES):
        s = SCORES.get(w) or VERB_SCORES[w]
        key = ("pos", "neu", "neg")[int(np.argmax(s))]
        words[w] = domain + dirs[key]
    for w in ("the", "a", "this", "is", "was", "they", "i", "we", "she", "he", "serve", "tastes", "said",
              "will", "next", "time", "restaurant", ".", ",", "and", "but", "not"):
        words.setdefault(w, domain + dirs["func"])
    out = []
    for w in sorted(words):
        v = words[w] + rng.normal(size=dim) * 0.3
        out.append(w + "\t" + "\t".join(f"{x:.6f}" for x in v))
    return "\n".join(out) + "\n"


def lexicon_rows():
    rows = ["# word\tUPOS\tpositive\tneutral\tnegative"]
    for w, (p, n, g) in sorted(SCORES.items()):
        rows.append(f"{w}\tADJ\t{p}\t{n}\t{g}")
    for w, (p, n, g) in sorted(VERB_SCORES.items()):
        rows.append(f"{w}\tVERB\t{p}\t{n}\t{g}")
    rows.append("not\tPART\t0.0\t0.375\t0.625")
    rows.append("never\tADV\t0.0\t0.375\t0.625")
    for w in ("little", "sluggish"):
        rows.append(f"{w}\tADJ\t0.125\t0.375\t0.5")
    return "\n".join(rows) + "\n"


def relation_rows():
    rows = ["# word\tUPOS\trelation\ttarget"]
    verbs = set(VERB_SCORES)
    for rel, pairs in (("synonym", SYN), ("antonym", ANT)):
        for a, b in pairs:
            pos = "VERB" if a in verbs else "ADJ"
            rows.append(f"{a}\t{pos}\t{rel}\t{b}")
            rows.append(f"{b}\t{pos}\t{rel}\t{a}")
    return "\n".join(rows) + "\n"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240607)
    for split in build(rng):
        split.write()
    (OUT / "sentiment.tsv").write_text(lexicon_rows(), encoding="utf-8")
    (OUT / "relations.tsv").write_text(relation_rows(), encoding="utf-8")
    (OUT / "negations.txt").write_text("not\nnever\n", encoding="utf-8")
    (OUT / "labels.txt").write_text("\n".join(DEFAULT_LABELS) + "\n", encoding="utf-8")
    (OUT / "vectors.tsv").write_text(vectors(np.random.default_rng(7)), encoding="utf-8")


if __name__ == "__main__":
    main()
