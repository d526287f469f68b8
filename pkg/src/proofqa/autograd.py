"""Minimal reverse-mode automatic differentiation over numpy float64 arrays.

Nodes hold a value and, when gradients are required, a closure that pushes
the upstream gradient into their parents.  The op set is exactly what the
loss graph needs: affine maps, tanh, gathers, segment sums, concatenation,
log-softmax and a few elementwise primitives.  Everything stays float64 so
finite-difference checks are tight.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "parents", "bw", "requires_grad")

    def __init__(self, value, requires_grad=False, parents=(), bw=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.bw = bw
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g


def _wrap(value, parents, bw):
    track = any(p.requires_grad for p in parents)
    if not track:
        return Tensor(value)
    return Tensor(value, requires_grad=True, parents=parents, bw=bw)


def backward(t: Tensor):
    """Backpropagate from a scalar tensor; leaves collect into ``.grad``."""
    if t.value.ndim != 0:
        raise ValueError("backward expects a scalar loss")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(t, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    t.grad = np.ones_like(t.value)
    for node in reversed(order):
        if node.bw is not None and node.grad is not None:
            node.bw(node.grad)


def param(value) -> Tensor:
    return Tensor(value, requires_grad=True)


def const(value) -> Tensor:
    return Tensor(value)


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.value.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.value.shape))
    return _wrap(a.value + b.value, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.value.shape))
        if b.requires_grad:
            b._accumulate(-_unbroadcast(g, b.value.shape))
    return _wrap(a.value - b.value, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.value, a.value.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.value, b.value.shape))
    return _wrap(a.value * b.value, (a, b), bw)


def scale(a: Tensor, c: float) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accumulate(g * c)
    return _wrap(a.value * c, (a,), bw)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum g down to ``shape`` to undo numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accumulate(g @ b.value.T)
        if b.requires_grad:
            if a.value.ndim == 1:
                b._accumulate(np.outer(a.value, g))
            else:
                b._accumulate(a.value.T @ g)
    return _wrap(a.value @ b.value, (a, b), bw)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.value)

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out * out))
    return _wrap(out, (a,), bw)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.value)

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * out)
    return _wrap(out, (a,), bw)


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def total(a: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    def bw(g):
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g, a.value.shape).copy())
    return _wrap(a.value.sum(), (a,), bw)


def mean0(a: Tensor) -> Tensor:
    """Mean over axis 0 of a matrix, giving a vector."""
    n = a.value.shape[0]

    def bw(g):
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g / n, a.value.shape).copy())
    return _wrap(a.value.mean(axis=0), (a,), bw)


def rows(a: Tensor, idx: np.ndarray) -> Tensor:
    """Row gather a[idx]; duplicate indices accumulate in the backward pass."""
    idx = np.asarray(idx, dtype=np.int64)

    def bw(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            np.add.at(a.grad, idx, g)
    return _wrap(a.value[idx], (a,), bw)


def take2d(a: Tensor, r: np.ndarray, c: np.ndarray) -> Tensor:
    """Elementwise gather a[r, c] from a matrix into a vector."""
    r = np.asarray(r, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)

    def bw(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            np.add.at(a.grad, (r, c), g)
    return _wrap(a.value[r, c], (a,), bw)


def take(a: Tensor, i: int) -> Tensor:
    """Single element of a vector, as a scalar."""
    def bw(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            a.grad[i] += g
    return _wrap(a.value[i], (a,), bw)


def segment_sum(a: Tensor, seg: np.ndarray, n: int) -> Tensor:
    """Sum vector entries into n buckets given by ``seg``."""
    seg = np.asarray(seg, dtype=np.int64)
    out = np.zeros(n)
    np.add.at(out, seg, a.value)

    def bw(g):
        if a.requires_grad:
            a._accumulate(g[seg])
    return _wrap(out, (a,), bw)


def concat(parts: list[Tensor], axis: int = 0) -> Tensor:
    sizes = [p.value.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for k, p in enumerate(parts):
            if p.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offsets[k], offsets[k + 1])
                p._accumulate(g[tuple(sl)])
    return _wrap(np.concatenate([p.value for p in parts], axis=axis), tuple(parts), bw)


def transpose(a: Tensor) -> Tensor:
    def bw(g):
        if a.requires_grad:
            a._accumulate(g.T)
    return _wrap(a.value.T, (a,), bw)


def stack(parts: list[Tensor]) -> Tensor:
    """Stack equal-shape tensors (scalars included) along a new axis 0."""
    def bw(g):
        for k, p in enumerate(parts):
            if p.requires_grad:
                p._accumulate(g[k])
    return _wrap(np.stack([p.value for p in parts]), tuple(parts), bw)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shift = a.value.max(axis=axis, keepdims=True)
    z = a.value - shift
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse

    def bw(g):
        if a.requires_grad:
            soft = np.exp(out)
            a._accumulate(g - soft * g.sum(axis=axis, keepdims=True))
    return _wrap(out, (a,), bw)


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with the bias broadcast over rows."""
    return add(matmul(x, w), b)


def mlp(x: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Two-layer perceptron with tanh hidden activation."""
    return affine(tanh(affine(x, w1, b1)), w2, b2)
