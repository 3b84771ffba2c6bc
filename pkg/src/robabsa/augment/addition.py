"""Non-target aspect addition: graft opinion-aspect units from other sentences."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..corpus import AbsaInstance, Polarity
from .edits import insert_tokens
from .opinions import aspect_head, locate_opinions
from .samples import SampleKind, SyntheticSample
from .scores import addition_confidence, aspect_similarity

# function-word dependents pulled into a unit alongside its path nodes
# p_m must beat the threshold by more than rounding noise: (0.9 + 0.8) / 2 is 0.8500000000000001
STRICT_MARGIN = 1e-12
CLOSURE_LABELS = ("det", "cop", "aux", "neg", "advmod", "compound", "nummod", "nmod:poss", "case")


@dataclass(frozen=True)
class AspectUnit:
    id: str
    source_id: str
    sentence: str            # source sentence text, to keep units out of their own sentence
    tokens: tuple            # forms
    upos: tuple
    heads: tuple             # 1-based within the unit, 0 for the unit root
    labels: tuple
    aspect_head: int         # 1-based within the unit
    aspect_forms: tuple
    polarity: Polarity
    embedding: np.ndarray

    @property
    def root(self) -> int:
        return self.heads.index(0) + 1


class MeanVectorEmbedder:
    """Mean of word vectors; unseen words get a fixed pseudo-random vector."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int | None = None):
        self.vectors = vectors
        self.dim = dim or (len(next(iter(vectors.values()))) if vectors else 16)

    def _oov(self, word: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "little")
        return np.random.default_rng(seed).normal(size=self.dim)

    def __call__(self, tokens: Sequence[str]) -> np.ndarray:
        vecs = [self.vectors.get(t.lower()) for t in tokens]
        vecs = [v if v is not None else self._oov(t.lower()) for v, t in zip(vecs, tokens)]
        return np.mean(vecs, axis=0)


def load_word_vectors(path) -> dict[str, np.ndarray]:
    out = {}
    dim = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        vec = np.array([float(x) for x in cols[1:]], dtype=np.float64)
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ValueError(f"{path}:{lineno}: vector has {len(vec)} dims, expected {dim}")
        out[cols[0]] = vec
    return out


def unit_nodes(inst: AbsaInstance, opinion: frozenset) -> tuple[list[int], int]:
    """Token indices of the smallest subtree joining the aspect and its opinion, and its root."""
    tree = inst.tree
    head = aspect_head(tree, inst.aspect)

    def path_to_root(i):
        out = [i]
        while tree.head_of(out[-1]) != 0:
            out.append(tree.head_of(out[-1]))
        return out

    paths = [path_to_root(head)] + [path_to_root(o) for o in sorted(opinion)]
    common = set(paths[0]).intersection(*map(set, paths[1:]))
    lca = next(i for i in paths[0] if i in common)
    nodes = set(inst.aspect.indices())
    for p in paths:
        for i in p:
            nodes.add(i)
            if i == lca:
                break
    for i in list(nodes):
        for arc in tree.children(i):
            if arc.label in CLOSURE_LABELS and arc.dependent not in nodes:
                nodes.add(arc.dependent)
    return sorted(nodes), lca


def build_aspect_units(corpus: Sequence[AbsaInstance], embedder: Callable[[Sequence[str]], np.ndarray]) -> list[AspectUnit]:
    units = []
    for inst in corpus:
        for k, link in enumerate(locate_opinions(inst)):
            nodes, lca = unit_nodes(inst, link.opinion)
            pos = {i: j + 1 for j, i in enumerate(nodes)}
            toks = [inst.tree.tokens[i - 1] for i in nodes]
            forms = [t.form for t in toks]
            if nodes[0] == 1 and toks[0].upos not in ("PROPN",) and forms[0] != "I":
                forms[0] = forms[0].lower()
            heads = tuple(0 if i == lca else pos[inst.tree.head_of(i)] for i in nodes)
            labels = tuple("conj" if i == lca else inst.tree.label_of(i) for i in nodes)
            units.append(AspectUnit(
                id=f"{inst.id}#u{k}",
                source_id=inst.id,
                sentence=inst.tree.text().lower(),
                tokens=tuple(forms),
                upos=tuple(t.upos for t in toks),
                heads=heads,
                labels=labels,
                aspect_head=pos[aspect_head(inst.tree, inst.aspect)],
                aspect_forms=tuple(f.lower() for f in inst.aspect_forms),
                polarity=inst.label,
                embedding=np.asarray(embedder(forms), dtype=np.float64),
            ))
    return units


def graft(inst_tree, unit: AspectUnit):
    """Append ", and <unit>" as a conjunct of the sentence root, before final punctuation."""
    tree = inst_tree
    n = len(tree)
    at = n if tree.tokens[-1].upos == "PUNCT" else n + 1
    root = tree.root()
    unit_root = at + 2 + unit.root - 1
    new = [(",", "PUNCT", unit_root, "punct"), ("and", "CCONJ", unit_root, "cc")]
    for form, upos, head, label in zip(unit.tokens, unit.upos, unit.heads, unit.labels):
        if head == 0:
            new.append((form, upos, root if root < at else root + len(unit.tokens) + 2, "conj"))
        else:
            new.append((form, upos, at + 2 + head - 1, label))
    return insert_tokens(tree, at, new)


def gen_aspect_addition(inst: AbsaInstance, units: Sequence[AspectUnit], J: int = 1,
                        threshold: float = 0.85, per_target: int = 2, pool: int = 8) -> list[SyntheticSample]:
    """Graft the J units most similar to the target aspect onto its sentence.

    Up to `per_target` distinct unit sets are tried, best mean similarity
    first; with J >= 2 the added units must not all share one polarity.
    """
    if J < 1:
        raise ValueError("J must be at least 1")
    own = [u for u in units if u.source_id == inst.id]
    if not own:
        return []
    target = own[0]
    text = inst.tree.text().lower()
    aspect = tuple(f.lower() for f in inst.aspect_forms)
    eligible = [u for u in units if u.sentence != text and u.aspect_forms != aspect]
    if len(eligible) < J:
        return []
    scored = sorted(((aspect_similarity(target.embedding, u.embedding), u) for u in eligible),
                    key=lambda p: (-p[0], p[1].id))[:J + pool]
    combos = []
    for combo in itertools.combinations(range(len(scored)), J):
        picked = [scored[i][1] for i in combo]
        if J >= 2 and len({u.polarity for u in picked}) < 2:
            continue
        if len({u.aspect_forms for u in picked}) < J:
            continue
        phis = [scored[i][0] for i in combo]
        combos.append((addition_confidence(phis), combo, phis, picked))
    combos.sort(key=lambda c: (-c[0], c[1]))

    out = []
    for conf, _combo, phis, picked in combos:
        if len(out) >= per_target:
            break
        if not conf > threshold + STRICT_MARGIN:
            break
        tree = inst.tree
        for u in picked:
            tree = graft(tree, u)
        rank = len(out)
        out.append(SyntheticSample(
            id=f"{inst.id}#m{rank}", source_id=inst.id, kind=SampleKind.ASPECT_ADDITION,
            tree=tree, aspect=inst.aspect, label=inst.label, confidence=conf, rank=rank,
            strategy=f"J={J}", unit_scores=tuple(phis), unit_ids=tuple(u.id for u in picked),
            gold_opinion=inst.gold_opinion,
        ))
    return out
