"""Structure-preserving edits on dependency trees."""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

from ..corpus import Arc, AspectSpan, DepTree, Token


def _shift(i: int, at: int, by: int) -> int:
    return i + by if i >= at else i


def insert_tokens(tree: DepTree, at: int, new: Sequence[tuple[str, str, int, str]]) -> DepTree:
    """Insert tokens so the first new one lands at 1-based position `at`.

    Each new token is ``(form, upos, head, label)`` where ``head`` is an index
    into the *resulting* tree.  Existing arcs are renumbered.
    """
    k = len(new)
    tokens: list[Token] = []
    arcs: list[Arc] = []
    for t in tree.tokens:
        tokens.append(replace(t, index=_shift(t.index, at, k)))
    for a in tree.arcs:
        head = 0 if a.head == 0 else _shift(a.head, at, k)
        arcs.append(Arc(head, _shift(a.dependent, at, k), a.label))
    for off, (form, upos, head, label) in enumerate(new):
        tokens.append(Token(at + off, form, form.lower(), upos))
        arcs.append(Arc(head, at + off, label))
    tokens.sort(key=lambda t: t.index)
    arcs.sort(key=lambda a: a.dependent)
    return DepTree(tuple(tokens), tuple(arcs))


def shift_span(span: AspectSpan, at: int, by: int) -> AspectSpan:
    return AspectSpan(_shift(span.start, at, by), _shift(span.end - 1, at, by) + 1)


def shift_indices(indices, at: int, by: int):
    if indices is None:
        return None
    return frozenset(_shift(i, at, by) for i in indices)


def flat_tree(forms: Sequence[str], root: int = 1) -> DepTree:
    """Provisional parse: every token depends on `root` with label ``dep``."""
    tokens = tuple(Token(i + 1, f, f.lower(), "X") for i, f in enumerate(forms))
    arcs = tuple(
        Arc(0, i + 1, "root") if i + 1 == root else Arc(root, i + 1, "dep")
        for i in range(len(forms))
    )
    return DepTree(tokens, arcs)
