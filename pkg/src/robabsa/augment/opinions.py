"""Rule-based localisation of an aspect's explicit opinion words."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import AbsaInstance, AspectSpan, DepTree

RELATIONS = ("amod", "nsubj", "dobj", "xcomp")
_OBJECT = ("dobj", "obj")


@dataclass(frozen=True)
class OpinionLink:
    aspect: AspectSpan
    opinion: frozenset
    relation: str

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation {self.relation!r} not one of {RELATIONS}")
        if set(self.opinion) & set(self.aspect.indices()):
            raise ValueError("opinion overlaps aspect span")

    @property
    def head(self) -> int:
        return min(self.opinion)


def aspect_head(tree: DepTree, span: AspectSpan) -> int:
    """The span token whose head lies outside the span (first one if several)."""
    inside = set(span.indices())
    for i in span.indices():
        if tree.head_of(i) not in inside:
            return i
    return span.start


def locate_opinions(inst: AbsaInstance) -> list[OpinionLink]:
    tree, span = inst.tree, inst.aspect
    inside = set(span.indices())
    head = aspect_head(tree, span)
    arc = next(a for a in tree.arcs if a.dependent == head)
    found: list[tuple[int, str]] = []

    # 1) adjectival modifier hanging off the aspect
    for child in tree.children(head):
        if child.label == "amod" and child.dependent not in inside:
            found.append((child.dependent, "amod"))

    governor = arc.head
    if governor and governor not in inside:
        xcomps = [c.dependent for c in tree.children(governor)
                  if c.label == "xcomp" and c.dependent not in inside]
        if arc.label == "nsubj":
            # a verb taking an open complement defers to the xcomp rule
            if not xcomps:
                found.append((governor, "nsubj"))
        elif arc.label in _OBJECT:
            found.append((governor, "dobj"))
        # 4) complement of a verb whose subject or object is the aspect
        if arc.label == "nsubj" or arc.label in _OBJECT:
            found.extend((c, "xcomp") for c in xcomps)

    links = []
    seen = set()
    for idx, rel in sorted(found):
        if (idx, rel) in seen:
            continue
        seen.add((idx, rel))
        links.append(OpinionLink(span, frozenset([idx]), rel))
    return links


def opinion_indices(inst: AbsaInstance) -> set[int]:
    out = set()
    for link in locate_opinions(inst):
        out |= link.opinion
    if inst.gold_opinion:
        out |= set(inst.gold_opinion)
    return out
