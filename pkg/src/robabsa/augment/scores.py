"""Quality gates for synthetic samples: modification, rewriting and addition confidence."""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from ..corpus import Polarity


class ConfidenceError(ValueError):
    pass


def modification_confidence(src_score: float, tgt_scores: Mapping[Polarity, float],
                            target: Polarity) -> float:
    """Localisation score times flipping score.

    ``src_score`` is the source opinion's strength towards the gold label; the
    flip term is ``2 a(t, target) / sum of a(t, other labels)``.  Unbounded above.
    """
    rest = sum(tgt_scores[p] for p in Polarity if p != target)
    if rest <= 0.0:
        raise ConfidenceError("candidate has no mass outside the target label")
    return src_score * 2.0 * tgt_scores[target] / rest


def meteor(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Exact-match unigram METEOR of `candidate` against a single reference.

    The alignment maximises the number of matched unigrams and, among those,
    minimises the number of chunks.
    """
    if not reference:
        raise ValueError("reference must be non-empty")
    if not candidate:
        return 0.0
    m, chunks = align(tuple(candidate), tuple(reference))
    if m == 0:
        return 0.0
    p = m / len(candidate)
    r = m / len(reference)
    f = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return f * (1 - penalty)


def align(cand: tuple, ref: tuple) -> tuple[int, int]:
    """(matches, chunks) of the best one-to-one exact alignment."""
    cc, rc = Counter(cand), Counter(ref)
    quota = {w: min(cc[w], rc[w]) for w in cc if w in rc}
    m = sum(quota.values())
    if m == 0:
        return 0, 0
    where: dict[str, tuple[int, ...]] = {}
    for j, w in enumerate(ref):
        where.setdefault(w, ())
        where[w] += (j,)
    # occurrences of each word at or after position i in the candidate
    later = [dict() for _ in range(len(cand) + 1)]
    for i in range(len(cand) - 1, -1, -1):
        later[i] = dict(later[i + 1])
        later[i][cand[i]] = later[i].get(cand[i], 0) + 1

    @lru_cache(maxsize=None)
    def best(i: int, used: frozenset, prev: int) -> int:
        if i == len(cand):
            return 0
        w = cand[i]
        need = quota.get(w, 0) - sum(1 for j in used if ref[j] == w)
        options = []
        if need < later[i].get(w, 0) or need == 0:
            options.append(best(i + 1, used, -1))
        if need > 0:
            for j in where[w]:
                if j in used:
                    continue
                new_chunk = 0 if (prev >= 0 and j == prev + 1) else 1
                options.append(new_chunk + best(i + 1, used | {j}, j))
        return min(options)

    return m, best(0, frozenset(), -1)


def aspect_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ConfidenceError(f"embedding shapes differ: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ConfidenceError("zero embedding has no direction")
    cos = float(u @ v) / (nu * nv)
    return (1.0 + min(1.0, max(-1.0, cos))) / 2.0


def addition_confidence(similarities: Sequence[float]) -> float:
    if not similarities:
        raise ConfidenceError("no added aspects")
    return math.fsum(similarities) / len(similarities)
