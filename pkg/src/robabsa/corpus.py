"""Data model and ingestion for aspect-level sentiment instances.

Parses arrive as CoNLL-U produced by an external dependency parser; instance
records are JSON lines that point at a parse by its block index.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CorpusError(ValueError):
    """Malformed input file (bad columns, bad record)."""


class StructuralError(ValueError):
    """A parse that is not a single-rooted tree."""


class Polarity(enum.IntEnum):
    # order doubles as the argmax tie-break order
    POSITIVE = 0
    NEGATIVE = 1
    NEUTRAL = 2

    @classmethod
    def parse(cls, text: str) -> "Polarity":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise CorpusError(f"unknown polarity {text!r}") from None

    def __str__(self) -> str:
        return self.name.capitalize()


# Universal Dependencies (v1 names, which the opinion rules use) plus v2 aliases.
DEFAULT_LABELS = (
    "acl", "acl:relcl", "advcl", "advmod", "amod", "appos", "aux", "auxpass", "case",
    "cc", "ccomp", "clf", "compound", "conj", "cop", "csubj", "dep", "det", "discourse",
    "dislocated", "dobj", "expl", "fixed", "flat", "goeswith", "iobj", "list", "mark",
    "neg", "nmod", "nmod:poss", "nmod:tmod", "nsubj", "nsubjpass", "nummod", "obj", "obl",
    "obl:tmod", "orphan", "parataxis", "punct", "reparandum", "root", "vocative", "xcomp",
)


def load_label_inventory(path) -> tuple[str, ...]:
    labels = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                labels.append(line)
    if not labels:
        raise CorpusError(f"{path}: empty label inventory")
    return tuple(dict.fromkeys(labels))


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str | None = None
    upos: str = "X"
    # untouched CoNLL-U columns XPOS, FEATS, DEPS, MISC
    extra: tuple[str, str, str, str] = ("_", "_", "_", "_")


@dataclass(frozen=True)
class Arc:
    head: int
    dependent: int
    label: str


@dataclass(frozen=True)
class DepTree:
    tokens: tuple[Token, ...]
    arcs: tuple[Arc, ...]

    def __post_init__(self):
        validate_tree(self)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def head_of(self, index: int) -> int:
        return self._heads()[index - 1]

    def label_of(self, index: int) -> str:
        return self._arc_by_dep()[index].label

    def root(self) -> int:
        return next(a.dependent for a in self.arcs if a.head == 0)

    def children(self, index: int) -> list[Arc]:
        return [a for a in self.arcs if a.head == index]

    def subtree(self, index: int) -> set[int]:
        """Indices dominated by `index`, itself included."""
        kids: dict[int, list[int]] = {}
        for a in self.arcs:
            kids.setdefault(a.head, []).append(a.dependent)
        out, stack = set(), [index]
        while stack:
            node = stack.pop()
            out.add(node)
            stack.extend(kids.get(node, ()))
        return out

    def text(self) -> str:
        return " ".join(self.forms)

    def with_forms(self, forms: Sequence[str]) -> "DepTree":
        """Same structure, new surface forms (lemmas follow the forms)."""
        if len(forms) != len(self.tokens):
            raise StructuralError("form count does not match token count")
        toks = tuple(
            replace(t, form=f, lemma=(t.lemma if f == t.form else f.lower()))
            for t, f in zip(self.tokens, forms)
        )
        return DepTree(toks, self.arcs)

    def _heads(self) -> list[int]:
        heads = [0] * len(self.tokens)
        for a in self.arcs:
            heads[a.dependent - 1] = a.head
        return heads

    def _arc_by_dep(self) -> dict[int, Arc]:
        return {a.dependent: a for a in self.arcs}


def validate_tree(tree: DepTree, inventory: Iterable[str] | None = None, name: str = "tree") -> None:
    n = len(tree.tokens)
    if n == 0:
        raise StructuralError(f"{name}: no tokens")
    for pos, tok in enumerate(tree.tokens, start=1):
        if tok.index != pos:
            raise StructuralError(f"{name}: token indices not contiguous at {tok.index}")
        if not tok.form:
            raise StructuralError(f"{name}: empty form at token {pos}")
    heads: dict[int, int] = {}
    for a in tree.arcs:
        if not 1 <= a.dependent <= n or not 0 <= a.head <= n:
            raise StructuralError(f"{name}: arc {a} out of range")
        if a.dependent in heads:
            raise StructuralError(f"{name}: token {a.dependent} has more than one head")
        if a.head == a.dependent:
            raise StructuralError(f"{name}: self-loop on token {a.dependent}")
        heads[a.dependent] = a.head
    if len(heads) != n:
        missing = sorted(set(range(1, n + 1)) - set(heads))
        raise StructuralError(f"{name}: tokens without head {missing}")
    roots = [d for d, h in heads.items() if h == 0]
    if len(roots) != 1:
        raise StructuralError(f"{name}: expected one root, found {len(roots)}")
    # every token must reach the root without revisiting a node
    for start in heads:
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                raise StructuralError(f"{name}: cycle through token {node}")
            seen.add(node)
            node = heads[node]
    if inventory is not None:
        allowed = set(inventory)
        for a in tree.arcs:
            if a.label not in allowed:
                raise StructuralError(f"{name}: label {a.label!r} not in inventory")


def tree_from_heads(forms, heads, labels, upos=None, lemmas=None) -> DepTree:
    """Build a tree from parallel per-token lists (heads are 1-based, 0 = root)."""
    upos = upos or ["X"] * len(forms)
    lemmas = lemmas or [None] * len(forms)
    tokens = tuple(Token(i + 1, f, l, u) for i, (f, l, u) in enumerate(zip(forms, lemmas, upos)))
    arcs = tuple(Arc(h, i + 1, lab) for i, (h, lab) in enumerate(zip(heads, labels)))
    return DepTree(tokens, arcs)


# --- CoNLL-U -----------------------------------------------------------------

def _parse_block(rows, inventory, name) -> DepTree:
    tokens, arcs = [], []
    for lineno, line in rows:
        cols = line.split("\t")
        if len(cols) != 10:
            raise CorpusError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        idx = cols[0]
        if "-" in idx or "." in idx:
            # multiword ranges and empty nodes carry no arc of their own
            continue
        try:
            index, head = int(idx), int(cols[6])
        except ValueError:
            raise CorpusError(f"line {lineno}: non-integer ID or HEAD") from None
        lemma = None if cols[2] == "_" else cols[2]
        tokens.append(Token(index, cols[1], lemma, cols[3], (cols[4], cols[5], cols[8], cols[9])))
        arcs.append(Arc(head, index, cols[7]))
    try:
        tree = DepTree(tuple(tokens), tuple(arcs))
        if inventory is not None:
            validate_tree(tree, inventory)
    except StructuralError as exc:
        raise StructuralError(f"{name}: {exc}") from None
    return tree


def parse_conllu(text: str, inventory: Iterable[str] | None = None) -> list[DepTree]:
    inventory = tuple(inventory) if inventory is not None else None
    trees: list[DepTree] = []
    rows: list[tuple[int, str]] = []
    sent_id = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if rows:
                trees.append(_parse_block(rows, inventory, sent_id or f"sentence {len(trees)}"))
            rows, sent_id = [], None
        elif line.startswith("#"):
            if line.startswith("# sent_id"):
                sent_id = line.split("=", 1)[-1].strip()
        else:
            rows.append((lineno, line))
    if rows:
        trees.append(_parse_block(rows, inventory, sent_id or f"sentence {len(trees)}"))
    return trees


def load_conllu(path, inventory: Iterable[str] | None = None) -> list[DepTree]:
    return parse_conllu(Path(path).read_text(encoding="utf-8"), inventory)


def format_conllu(trees: Iterable[DepTree]) -> str:
    blocks = []
    for tree in trees:
        heads = {a.dependent: a for a in tree.arcs}
        lines = []
        for t in tree.tokens:
            a = heads[t.index]
            xpos, feats, deps, misc = t.extra
            lines.append("\t".join([
                str(t.index), t.form, t.lemma or "_", t.upos, xpos, feats,
                str(a.head), a.label, deps, misc,
            ]))
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def dump_conllu(trees: Iterable[DepTree], path) -> None:
    Path(path).write_text(format_conllu(trees), encoding="utf-8")


# --- instances ---------------------------------------------------------------

@dataclass(frozen=True)
class AspectSpan:
    start: int  # inclusive, 1-based
    end: int    # exclusive

    def indices(self) -> range:
        return range(self.start, self.end)

    def check(self, n: int) -> None:
        if not 1 <= self.start < self.end <= n + 1:
            raise CorpusError(f"aspect span [{self.start},{self.end}) invalid for {n} tokens")


@dataclass(frozen=True)
class AbsaInstance:
    id: str
    tree: DepTree
    aspect: AspectSpan
    label: Polarity
    subset_tags: frozenset[str] = field(default_factory=frozenset)
    gold_opinion: frozenset[int] | None = None

    def __post_init__(self):
        self.aspect.check(len(self.tree))
        if self.gold_opinion is not None:
            bad = [i for i in self.gold_opinion if not 1 <= i <= len(self.tree)]
            if bad:
                raise CorpusError(f"{self.id}: opinion indices {bad} out of range")

    @property
    def aspect_forms(self) -> list[str]:
        return [self.tree.tokens[i - 1].form for i in self.aspect.indices()]

    @property
    def aspect_text(self) -> str:
        return " ".join(self.aspect_forms)


def instance_record(inst: AbsaInstance, sent: int) -> dict:
    rec = {
        "id": inst.id,
        "sent": sent,
        "span": [inst.aspect.start, inst.aspect.end],
        "label": str(inst.label),
    }
    if inst.subset_tags:
        rec["tags"] = sorted(inst.subset_tags)
    if inst.gold_opinion is not None:
        rec["opinion"] = sorted(inst.gold_opinion)
    return rec


def parse_instance_record(rec: dict, trees: Sequence[DepTree], where: str = "record") -> AbsaInstance:
    try:
        sent = int(rec["sent"])
        start, end = (int(x) for x in rec["span"])
        label = Polarity.parse(rec["label"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CorpusError):
            raise CorpusError(f"{where}: {exc}") from None
        raise CorpusError(f"{where}: missing or malformed field ({exc})") from None
    if not 0 <= sent < len(trees):
        raise CorpusError(f"{where}: sentence index {sent} out of range")
    tree = trees[sent]
    span = AspectSpan(start, end)
    try:
        span.check(len(tree))
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None
    opinion = rec.get("opinion")
    return AbsaInstance(
        id=str(rec.get("id", f"s{sent}:{start}-{end}")),
        tree=tree,
        aspect=span,
        label=label,
        subset_tags=frozenset(rec.get("tags", ())),
        gold_opinion=frozenset(int(i) for i in opinion) if opinion is not None else None,
    )


def load_instances(path, trees: Sequence[DepTree]) -> list[AbsaInstance]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            out.append(parse_instance_record(rec, trees, f"{path}:{lineno}"))
    return out


def load_corpus(instances_path, conllu_path, inventory=None) -> list[AbsaInstance]:
    return load_instances(instances_path, load_conllu(conllu_path, inventory))


def dump_instances(instances: Sequence[AbsaInstance], instances_path, conllu_path) -> None:
    """Write instances and their trees; instances sharing a tree object share a block."""
    trees: list[DepTree] = []
    slot: dict[int, int] = {}
    lines = []
    for inst in instances:
        key = id(inst.tree)
        if key not in slot:
            slot[key] = len(trees)
            trees.append(inst.tree)
        lines.append(json.dumps(instance_record(inst, slot[key]), sort_keys=True))
    dump_conllu(trees, conllu_path)
    Path(instances_path).write_text("".join(l + "\n" for l in lines), encoding="utf-8")


# --- parse noise ---------------------------------------------------------------

def inject_parse_noise(tree: DepTree, rate: float, seed: int,
                       inventory: Sequence[str] = DEFAULT_LABELS) -> DepTree:
    """Re-point round(rate * n) arcs to random valid heads with random labels.

    Arcs are rewritten one at a time, drawing only heads that keep the tree
    acyclic and single-rooted, so exactly that many arcs end up different
    from the input.  The root keeps head 0 and receives a new label.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"noise rate {rate} outside [0, 1]")
    n = len(tree)
    k = int(round(rate * n))
    if k == 0:
        return tree
    rng = np.random.default_rng([seed, n])
    labels = sorted(set(inventory) - {"root"})
    heads = {a.dependent: a.head for a in tree.arcs}
    rels = {a.dependent: a.label for a in tree.arcs}
    original = dict(zip(heads, zip(heads.values(), rels.values())))
    chosen = sorted(int(d) + 1 for d in rng.choice(n, size=k, replace=False))

    def descendants(d):
        out, frontier = {d}, [d]
        while frontier:
            node = frontier.pop()
            for dep, h in heads.items():
                if h == node and dep not in out:
                    out.add(dep)
                    frontier.append(dep)
        return out

    for d in chosen:
        old_head, old_label = original[d]
        if heads[d] == 0:
            pool = [(0, lab) for lab in labels if lab != old_label]
        else:
            below = descendants(d)
            pool = [
                (h, lab)
                for h in range(1, n + 1) if h not in below
                for lab in labels
                if (h, lab) != (old_head, old_label)
            ]
        h, lab = pool[int(rng.integers(len(pool)))]
        heads[d], rels[d] = h, lab
    arcs = tuple(Arc(heads[t.index], t.index, rels[t.index]) for t in tree.tokens)
    return DepTree(tree.tokens, arcs)


def arc_difference(a: DepTree, b: DepTree) -> int:
    return len(set(a.arcs) - set(b.arcs))
