"""Differentiable operations.

Broadcasting is limited to adding a bias vector along the last axis; any
other expansion goes through `tile_rows` explicitly.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import NumericError, ShapeError, Tensor, as_tensor, make_node


def _same(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape == b.shape:
        return make_node(a.data + b.data, (a, b), lambda g: (g, g), "add")
    if b.data.ndim == 1 and a.data.ndim >= 1 and a.shape[-1] == b.shape[0]:
        axes = tuple(range(a.data.ndim - 1))
        return make_node(a.data + b.data, (a, b), lambda g: (g, g.sum(axis=axes)), "bias_add")
    raise ShapeError(f"add: shapes {a.shape} and {b.shape} are incompatible")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same(a, b, "sub")
    return make_node(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same(a, b, "mul")
    ad, bd = a.data, b.data
    return make_node(ad * bd, (a, b), lambda g: (g * bd, g * ad), "mul")


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return make_node(a.data * c, (a,), lambda g: (g * c,), "scale")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2) or ad.ndim == bd.ndim == 1:
        raise ShapeError(f"matmul: unsupported ranks {ad.ndim} and {bd.ndim}")
    if ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul: inner dimensions {ad.shape} x {bd.shape}")
    out = ad @ bd

    def back(g):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 2:  # matrix @ vector
            return np.outer(g, bd), ad.T @ g
        return bd @ g, np.outer(ad, g)  # vector @ matrix

    return make_node(out, (a, b), back, "matmul")


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError("transpose expects a matrix")
    return make_node(a.data.T.copy(), (a,), lambda g: (g.T,), "transpose")


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {shape}") from None
    return make_node(out, (a,), lambda g: (g.reshape(old),), "reshape")


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: {exc}") from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def back(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_node(out, ts, back, "concat")


def take(a, start: int, stop: int, axis: int = 0) -> Tensor:
    a = as_tensor(a)
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    shape = a.shape

    def back(g):
        full = np.zeros(shape)
        full[index] = g
        return (full,)

    return make_node(a.data[index].copy(), (a,), back, "take")


def split(a, sizes: Sequence[int], axis: int = 0) -> list[Tensor]:
    a = as_tensor(a)
    if sum(sizes) != a.shape[axis]:
        raise ShapeError(f"split: sizes {list(sizes)} do not cover axis of length {a.shape[axis]}")
    out, start = [], 0
    for s in sizes:
        out.append(take(a, start, start + s, axis))
        start += s
    return out


def embedding_gather(table, ids) -> Tensor:
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2:
        raise ShapeError("embedding table must be a matrix")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError("embedding id out of range")
    shape = table.shape

    def back(g):
        full = np.zeros(shape)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, shape[1]))
        return (full,)

    return make_node(table.data[ids], (table,), back, "embedding_gather")


def tile_rows(v, n: int) -> Tensor:
    """Stack `n` copies of vector `v` into an (n, d) matrix."""
    v = as_tensor(v)
    if v.data.ndim != 1:
        raise ShapeError("tile_rows expects a vector")
    return make_node(np.tile(v.data, (n, 1)), (v,), lambda g: (g.sum(axis=0),), "tile_rows")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return make_node(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return make_node(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def exp(a) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)
    return make_node(y, (a,), lambda g: (g * y,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise NumericError("log of a non-positive value")
    x = a.data
    return make_node(np.log(x), (a,), lambda g: (g / x,), "log")


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    return make_node(np.array(a.data.sum()), (a,), lambda g: (np.full(shape, float(g)),), "sum")


def mean_pool(a, axis: int = 0) -> Tensor:
    a = as_tensor(a)
    n = a.shape[axis]
    if n == 0:
        raise ShapeError("mean_pool over an empty axis")
    shape = a.shape

    def back(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape) / n,)

    return make_node(a.data.mean(axis=axis), (a,), back, "mean_pool")


def masked_softmax(a, mask=None, axis: int = -1) -> Tensor:
    """Softmax along `axis` over entries where `mask` is true; masked entries are exactly 0."""
    a = as_tensor(a)
    x = a.data
    m = np.ones(x.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != x.shape:
        raise ShapeError(f"mask shape {m.shape} != input shape {x.shape}")
    if not np.all(m.any(axis=axis)):
        raise NumericError("masked_softmax: a row has no unmasked entry")
    shifted = np.where(m, x, -np.inf)
    shifted = shifted - shifted.max(axis=axis, keepdims=True)
    e = np.where(m, np.exp(shifted), 0.0)
    y = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return make_node(y, (a,), back, "masked_softmax")


def softmax(a, axis: int = -1) -> Tensor:
    return masked_softmax(a, None, axis)


def log_softmax(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - lse
    p = np.exp(y)

    def back(g):
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return make_node(y, (a,), back, "log_softmax")


def cross_entropy(logits, target: int) -> Tensor:
    """Negative log-likelihood of class `target` under softmax(logits)."""
    logits = as_tensor(logits)
    if logits.data.ndim != 1:
        raise ShapeError("cross_entropy expects a logit vector")
    if not 0 <= target < logits.shape[0]:
        raise ShapeError(f"target {target} out of range")
    x = logits.data
    shifted = x - x.max()
    lse = np.log(np.exp(shifted).sum())
    p = np.exp(shifted - lse)

    def back(g):
        d = p.copy()
        d[target] -= 1.0
        return (d * g,)

    return make_node(np.array(lse - shifted[target]), (logits,), back, "cross_entropy")


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    x = a.data
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError("layer_norm gain/bias must match the last axis")
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data
    axes = tuple(range(x.ndim - 1))

    def back(g):
        gx = g * gain.data
        dx = inv * (gx - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return make_node(out, (a, gain, bias), back, "layer_norm")


def dropout_mask(shape, rate: float, seed: int, step: int, node: int) -> np.ndarray:
    """Keep-mask from a counter-based generator keyed by (seed, step, node)."""
    bitgen = np.random.Philox(key=np.uint64(seed % (1 << 64)),
                              counter=[np.uint64(step), np.uint64(node), 0, 0])
    return np.random.Generator(bitgen).random(shape) >= rate


def dropout(a, rate: float, train: bool, seed: int = 0, step: int = 0, node: int = 0) -> Tensor:
    a = as_tensor(a)
    if not train or rate <= 0.0:
        return a
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    keep = dropout_mask(a.shape, rate, seed, step, node) / (1.0 - rate)
    return make_node(a.data * keep, (a,), lambda g: (g * keep,), "dropout")


def cosine_similarity(a, b, eps: float = 1e-8) -> Tensor:
    """x.y / (|x| |y|) with each norm clamped below at `eps`, so a zero vector scores 0."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 1:
        raise ShapeError("cosine_similarity expects vectors")
    _same(a, b, "cosine_similarity")
    x, y = a.data, b.data
    rx, ry = np.linalg.norm(x), np.linalg.norm(y)
    nx, ny = max(rx, eps), max(ry, eps)
    c = float(x @ y) / (nx * ny)

    def back(g):
        # a clamped norm is constant, so its direction term drops out
        gx = y / (nx * ny) - (c * x / nx ** 2 if rx > eps else 0.0)
        gy = x / (nx * ny) - (c * y / ny ** 2 if ry > eps else 0.0)
        return g * gx, g * gy

    return make_node(np.array(c), (a, b), back, "cosine_similarity")


def pair_contract(weights, values) -> Tensor:
    """out[i] = sum_j weights[i, j] * values[i, j, :]."""
    w, v = as_tensor(weights), as_tensor(values)
    if w.data.ndim != 2 or v.data.ndim != 3 or v.shape[:2] != w.shape:
        raise ShapeError(f"pair_contract: shapes {w.shape} and {v.shape}")
    wd, vd = w.data, v.data
    out = np.einsum("ij,ijd->id", wd, vd)

    def back(g):
        return np.einsum("id,ijd->ij", g, vd), wd[:, :, None] * g[:, None, :]

    return make_node(out, (w, v), back, "pair_contract")


def grad_reverse(a, lam: float) -> Tensor:
    """Identity forward; multiplies the incoming gradient by -lam."""
    a = as_tensor(a)
    return make_node(a.data.copy(), (a,), lambda g: (-lam * g,), "grad_reverse")
