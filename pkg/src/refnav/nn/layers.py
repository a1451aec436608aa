"""LSTM / bi-LSTM cells, two-layer MLP, positional encoding, softmax.

All layers run on autodiff Vars; wrap plain arrays with `constant` first.
Numeric helpers (`softmax_np`, `positional_encoding`) are plain numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .params import ParamStore, glorot_uniform


def softmax_np(v: np.ndarray) -> np.ndarray:
    """Numerically stable softmax of a 1D array."""
    z = np.asarray(v, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def positional_encoding(length: int, dim: int) -> np.ndarray:
    """Sinusoidal position matrix P with P[pos,2i]=sin(pos/10000^(2i/dim))
    and P[pos,2i+1]=cos(same argument)."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(0, dim, 2, dtype=np.float64)
    angles = pos / np.power(10000.0, i / dim)
    p = np.zeros((length, dim))
    p[:, 0::2] = np.sin(angles)
    p[:, 1::2] = np.cos(angles)[:, : p[:, 1::2].shape[1]]
    return p


@dataclass(frozen=True)
class LstmParams:
    """Packed gate weights: rows are [input, forget, cell, output] blocks."""

    w: Var  # (4*hidden, in + hidden)
    b: Var  # (4*hidden,)
    hidden: int

    @classmethod
    def create(cls, store: ParamStore, name: str, in_dim: int, hidden: int,
               rng: np.random.Generator) -> "LstmParams":
        w = store.register(
            f"{name}.w", glorot_uniform(rng, in_dim + hidden, hidden, (4 * hidden, in_dim + hidden)))
        bias = np.zeros(4 * hidden)
        bias[hidden: 2 * hidden] = 1.0  # forget-gate bias
        b = store.register(f"{name}.b", bias)
        return cls(w=w, b=b, hidden=hidden)

    def zero_state(self) -> tuple[Var, Var]:
        z = np.zeros(self.hidden)
        return ad.constant(z), ad.constant(z)


def lstm_step(p: LstmParams, x: Var, h: Var, c: Var) -> tuple[Var, Var]:
    """One standard gated update (input/forget/output gates, tanh candidate)."""
    gates = ad.matmul(p.w, ad.concat([x, h])) + p.b
    n = p.hidden
    i = ad.sigmoid(_slice(gates, 0, n))
    f = ad.sigmoid(_slice(gates, n, 2 * n))
    g = ad.tanh(_slice(gates, 2 * n, 3 * n))
    o = ad.sigmoid(_slice(gates, 3 * n, 4 * n))
    c_new = ad.mul(f, c) + ad.mul(i, g)
    h_new = ad.mul(o, ad.tanh(c_new))
    return h_new, c_new


def _slice(v: Var, start: int, stop: int) -> Var:
    out = Var(v.value[start:stop], (v,))

    def backward(grad):
        if v.requires_grad:
            if v.grad is None:
                v.grad = np.zeros_like(v.value)
            v.grad[start:stop] += grad

    out.backward_fn = backward
    return out


def lstm_run(p: LstmParams, xs: list[Var]) -> tuple[list[Var], Var, Var]:
    """Run over a sequence; returns per-step hidden states and final (h, c)."""
    h, c = p.zero_state()
    hs = []
    for x in xs:
        h, c = lstm_step(p, x, h, c)
        hs.append(h)
    return hs, h, c


@dataclass(frozen=True)
class BiLstmParams:
    forward: LstmParams
    backward: LstmParams

    @classmethod
    def create(cls, store: ParamStore, name: str, in_dim: int, hidden: int,
               rng: np.random.Generator) -> "BiLstmParams":
        return cls(
            forward=LstmParams.create(store, f"{name}.fwd", in_dim, hidden, rng),
            backward=LstmParams.create(store, f"{name}.bwd", in_dim, hidden, rng),
        )


def bilstm_encode(p: BiLstmParams, xs: list[Var]) -> tuple[list[Var], Var, Var]:
    """Bidirectional encoding.

    Returns per-token states (forward and backward halves concatenated)
    plus the two directions' final states: h0 is the backward pass's final
    state (computed at the first token), hL the forward pass's.
    """
    fwd, h_l, _ = lstm_run(p.forward, xs)
    bwd_rev, h_0, _ = lstm_run(p.backward, list(reversed(xs)))
    bwd = list(reversed(bwd_rev))
    states = [ad.concat([f, b]) for f, b in zip(fwd, bwd)]
    return states, h_0, h_l


@dataclass(frozen=True)
class MlpParams:
    """Two-layer perceptron: linear -> ReLU -> linear."""

    w1: Var
    b1: Var
    w2: Var
    b2: Var

    @classmethod
    def create(cls, store: ParamStore, name: str, in_dim: int, hidden: int,
               out_dim: int, rng: np.random.Generator) -> "MlpParams":
        return cls(
            w1=store.register(f"{name}.w1", glorot_uniform(rng, in_dim, hidden, (hidden, in_dim))),
            b1=store.register(f"{name}.b1", np.zeros(hidden)),
            w2=store.register(f"{name}.w2", glorot_uniform(rng, hidden, out_dim, (out_dim, hidden))),
            b2=store.register(f"{name}.b2", np.zeros(out_dim)),
        )


def mlp2(p: MlpParams, x: Var) -> Var:
    return ad.matmul(p.w2, ad.relu(ad.matmul(p.w1, x) + p.b1)) + p.b2


@dataclass(frozen=True)
class LinearParams:
    w: Var
    b: Var

    @classmethod
    def create(cls, store: ParamStore, name: str, in_dim: int, out_dim: int,
               rng: np.random.Generator) -> "LinearParams":
        return cls(
            w=store.register(f"{name}.w", glorot_uniform(rng, in_dim, out_dim, (out_dim, in_dim))),
            b=store.register(f"{name}.b", np.zeros(out_dim)),
        )


def linear(p: LinearParams, x: Var) -> Var:
    return ad.matmul(p.w, x) + p.b
