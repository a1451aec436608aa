"""Minimal reverse-mode differentiation over float64 numpy arrays.

Each op stores a hand-derived backward closure; calling backward() on a
scalar walks the graph in reverse topological order. Only nodes that can
reach a trainable leaf get gradients, so wrapping constants is cheap.
The op set is deliberately small and closed: it is exactly what the
navigator/pointer forward passes need.
"""

from __future__ import annotations

import numpy as np


class Var:
    """A node in the computation graph."""

    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def backward(self):
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar loss")
        order: list[Var] = []
        seen = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
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
        self.accumulate(np.ones_like(self.value))
        for node in reversed(order):
            if node.backward_fn is not None and node.grad is not None:
                node.backward_fn(node.grad)

    # convenience arithmetic (scalars and Vars)
    def __add__(self, other):
        return add(self, as_var(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(as_var(other), -1.0))

    def __rsub__(self, other):
        return add(as_var(other), scale(self, -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def constant(x) -> Var:
    return Var(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Var, b: Var) -> Var:
    out = Var(a.value + b.value, (a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.value.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.value.shape))

    out.backward_fn = backward
    return out


def mul(a: Var, b: Var) -> Var:
    out = Var(a.value * b.value, (a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.value, a.value.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.value, b.value.shape))

    out.backward_fn = backward
    return out


def scale(a: Var, s: float) -> Var:
    out = Var(a.value * s, (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * s)

    out.backward_fn = backward
    return out


def matmul(a: Var, b: Var) -> Var:
    """Matrix/vector product for the 1D/2D combinations numpy supports."""
    out = Var(a.value @ b.value, (a, b))
    av, bv = a.value, b.value

    def backward(g):
        if a.requires_grad:
            if av.ndim == 2 and bv.ndim == 1:
                a.accumulate(np.outer(g, bv))
            elif av.ndim == 1 and bv.ndim == 2:
                a.accumulate(bv @ g)
            elif av.ndim == 1 and bv.ndim == 1:
                a.accumulate(g * bv)
            else:
                a.accumulate(g @ bv.T)
        if b.requires_grad:
            if av.ndim == 2 and bv.ndim == 1:
                b.accumulate(av.T @ g)
            elif av.ndim == 1 and bv.ndim == 2:
                b.accumulate(np.outer(av, g))
            elif av.ndim == 1 and bv.ndim == 1:
                b.accumulate(g * av)
            else:
                b.accumulate(av.T @ g)

    out.backward_fn = backward
    return out


def tanh(a: Var) -> Var:
    y = np.tanh(a.value)
    out = Var(y, (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * (1.0 - y * y))

    out.backward_fn = backward
    return out


def sigmoid(a: Var) -> Var:
    y = 1.0 / (1.0 + np.exp(-a.value))
    out = Var(y, (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * y * (1.0 - y))

    out.backward_fn = backward
    return out


def relu(a: Var) -> Var:
    mask = a.value > 0
    out = Var(np.where(mask, a.value, 0.0), (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * mask)

    out.backward_fn = backward
    return out


def softmax(a: Var) -> Var:
    """Stable softmax over a 1D vector."""
    z = a.value - a.value.max()
    e = np.exp(z)
    y = e / e.sum()
    out = Var(y, (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(y * (g - float(np.dot(g, y))))

    out.backward_fn = backward
    return out


def log_softmax(a: Var) -> Var:
    z = a.value - a.value.max()
    lse = np.log(np.exp(z).sum())
    y = z - lse
    out = Var(y, (a,))
    sm = np.exp(y)

    def backward(g):
        if a.requires_grad:
            a.accumulate(g - sm * g.sum())

    out.backward_fn = backward
    return out


def concat(parts: list[Var]) -> Var:
    out = Var(np.concatenate([p.value for p in parts]), tuple(parts))
    sizes = [p.value.shape[0] for p in parts]

    def backward(g):
        offset = 0
        for p, size in zip(parts, sizes):
            if p.requires_grad:
                p.accumulate(g[offset:offset + size])
            offset += size

    out.backward_fn = backward
    return out


def stack_rows(rows: list[Var]) -> Var:
    out = Var(np.stack([r.value for r in rows]), tuple(rows))

    def backward(g):
        for i, r in enumerate(rows):
            if r.requires_grad:
                r.accumulate(g[i])

    out.backward_fn = backward
    return out


def index_row(m: Var, i: int) -> Var:
    out = Var(m.value[i], (m,))

    def backward(g):
        if m.requires_grad:
            if m.grad is None:
                m.grad = np.zeros_like(m.value)
            m.grad[i] += g

    out.backward_fn = backward
    return out


def index_item(v: Var, i: int) -> Var:
    out = Var(v.value[i], (v,))

    def backward(g):
        if v.requires_grad:
            if v.grad is None:
                v.grad = np.zeros_like(v.value)
            v.grad[i] += g

    out.backward_fn = backward
    return out


def vsum(a: Var) -> Var:
    out = Var(a.value.sum(), (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(np.full_like(a.value, float(g)))

    out.backward_fn = backward
    return out


def vmean(a: Var) -> Var:
    n = a.value.size
    out = Var(a.value.mean(), (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(np.full_like(a.value, float(g) / n))

    out.backward_fn = backward
    return out


def mean_rows(m: Var) -> Var:
    """Mean over axis 0 of a 2D matrix."""
    n = m.value.shape[0]
    out = Var(m.value.mean(axis=0), (m,))

    def backward(g):
        if m.requires_grad:
            m.accumulate(np.tile(g / n, (n, 1)))

    out.backward_fn = backward
    return out


def max_of(items: list[Var]) -> Var:
    """Max over scalar Vars; the gradient flows to the first argmax."""
    values = [float(it.value) for it in items]
    best = max(range(len(items)), key=lambda i: (values[i], -i))
    out = Var(values[best], tuple(items))

    def backward(g):
        if items[best].requires_grad:
            items[best].accumulate(np.asarray(float(g)))

    out.backward_fn = backward
    return out


def square(a: Var) -> Var:
    out = Var(a.value ** 2, (a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * 2.0 * a.value)

    out.backward_fn = backward
    return out
