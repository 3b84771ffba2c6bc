"""Central finite-difference checks for every differentiable op."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ops
from .tensor import Tape, Tensor, backward

STEP = 1e-5
FLOOR = 1e-6


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = FLOOR) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def numeric_grad(f: Callable[[], float], x: np.ndarray, step: float = STEP) -> np.ndarray:
    """d f / d x by central differences; `x` is perturbed in place and restored."""
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        hi = f()
        flat[i] = old - step
        lo = f()
        flat[i] = old
        gflat[i] = (hi - lo) / (2 * step)
    return g


def _away_from_zero(rng, shape, lo=0.1, hi=2.0):
    return rng.uniform(lo, hi, shape) * rng.choice([-1.0, 1.0], shape)


# each case: rng -> (input arrays, function of input tensors[, gradient factor])
def _cases():
    def c_add(r):
        return [r.normal(size=(3, 4)), r.normal(size=(3, 4))], lambda a, b: ops.add(a, b)

    def c_bias(r):
        return [r.normal(size=(3, 4)), r.normal(size=4)], lambda a, b: ops.add(a, b)

    def c_mul(r):
        return [r.normal(size=(3, 4)), r.normal(size=(3, 4))], lambda a, b: ops.mul(a, b)

    def c_matmul(r):
        return [r.normal(size=(3, 4)), r.normal(size=(4, 2))], lambda a, b: ops.matmul(a, b)

    def c_matvec(r):
        return [r.normal(size=(3, 4)), r.normal(size=4)], lambda a, b: ops.matmul(a, b)

    def c_concat(r):
        return [r.normal(size=(2, 3)), r.normal(size=(2, 2))], lambda a, b: ops.concat([a, b], axis=1)

    def c_split(r):
        def f(a):
            x, y = ops.split(a, [2, 3], axis=1)
            return ops.concat([ops.mul(x, x), y], axis=1)
        return [r.normal(size=(3, 5))], f

    def c_gather(r):
        ids = r.integers(0, 5, size=7)
        return [r.normal(size=(5, 3))], lambda t: ops.embedding_gather(t, ids)

    def c_relu(r):
        return [_away_from_zero(r, (3, 4))], ops.relu

    def c_tanh(r):
        return [r.normal(size=(3, 4))], ops.tanh

    def c_exp(r):
        return [r.normal(size=(3, 4))], ops.exp

    def c_log(r):
        return [r.uniform(0.5, 2.0, (3, 4))], ops.log

    def c_softmax(r):
        mask = r.random((3, 5)) < 0.7
        mask[:, 0] = True
        return [r.normal(size=(3, 5))], lambda a: ops.masked_softmax(a, mask)

    def c_log_softmax(r):
        return [r.normal(size=(2, 4))], ops.log_softmax

    def c_mean(r):
        return [r.normal(size=(4, 3))], lambda a: ops.mean_pool(a, axis=0)

    def c_layer_norm(r):
        return ([r.normal(size=(3, 5)), r.normal(size=5), r.normal(size=5)],
                lambda a, g, b: ops.layer_norm(a, g, b))

    def c_dropout(r):
        seed = int(r.integers(1 << 30))
        return [r.normal(size=(4, 6))], lambda a: ops.dropout(a, 0.3, True, seed, 1, 2)

    def c_ce(r):
        t = int(r.integers(3))
        return [r.normal(size=3)], lambda a: ops.cross_entropy(a, t)

    def c_cos(r):
        return [r.normal(size=5), r.normal(size=5)], ops.cosine_similarity

    def c_transpose(r):
        return [r.normal(size=(2, 3))], ops.transpose

    def c_reshape(r):
        return [r.normal(size=(2, 6))], lambda a: ops.reshape(a, (3, 4))

    def c_tile(r):
        return [r.normal(size=4)], lambda a: ops.tile_rows(a, 3)

    def c_contract(r):
        return [r.normal(size=(3, 4)), r.normal(size=(3, 4, 2))], ops.pair_contract

    def c_reverse(r):
        lam = float(r.uniform(0.1, 1.0))
        # the reversal is not a derivative: expect -lam times the forward slope
        return [r.normal(size=(2, 3))], lambda a: ops.grad_reverse(ops.tanh(a), lam), -lam

    return {
        "add": c_add, "bias_add": c_bias, "mul": c_mul, "matmul": c_matmul,
        "matvec": c_matvec, "concat": c_concat, "split": c_split,
        "embedding_gather": c_gather, "relu": c_relu, "tanh": c_tanh, "exp": c_exp,
        "log": c_log, "masked_softmax": c_softmax, "log_softmax": c_log_softmax,
        "mean_pool": c_mean, "layer_norm": c_layer_norm, "dropout": c_dropout,
        "cross_entropy": c_ce, "cosine_similarity": c_cos, "transpose": c_transpose,
        "reshape": c_reshape, "tile_rows": c_tile, "pair_contract": c_contract,
        "grad_reverse": c_reverse,
    }


OP_CASES = _cases()


@dataclass
class CheckResult:
    name: str
    seeds: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def check_case(name: str, seed: int) -> float:
    rng = np.random.default_rng([seed, len(name), sum(map(ord, name))])
    arrays, fn, *factor = OP_CASES[name](rng)
    factor = factor[0] if factor else 1.0
    inputs = [Tensor(a, requires_grad=True) for a in arrays]
    probe = None

    def scalar(out):
        nonlocal probe
        if out.data.ndim == 0:
            return out
        if probe is None:
            probe = np.random.default_rng(seed + 7).normal(size=out.shape)
        return ops.sum_all(ops.mul(out, Tensor(probe)))

    with Tape() as tape:
        loss = scalar(fn(*inputs))
    grads = backward(tape, loss, inputs)

    def value():
        return float(scalar(fn(*[Tensor(t.data) for t in inputs])).data)

    worst = 0.0
    for t in inputs:
        num = factor * numeric_grad(value, t.data)
        worst = max(worst, relative_error(grads[t], num))
    return worst


def check_ops(seeds: int = 100, tolerance: float = 1e-4, names=None) -> list[CheckResult]:
    out = []
    for name in names or OP_CASES:
        worst = max(check_case(name, s) for s in range(seeds))
        out.append(CheckResult(name, seeds, worst, tolerance))
    return out
