"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable

from .autodiff import Var
from .params import ParamStore


def grad_check(loss_fn: Callable[[], Var], store: ParamStore,
               eps: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    `loss_fn` must be a deterministic scalar function of the store's
    parameters (re-evaluated many times; any sampling must be frozen).
    Relative error uses max(1, |analytic|, |numeric|) as the denominator
    so near-zero gradients are compared absolutely.
    """
    store.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else 0.0 * p.value)
        for name, p in store.items()
    }

    worst = 0.0
    for name, p in store.items():
        flat = p.value.ravel()
        a_flat = analytic[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_fn().item()
            flat[i] = orig - eps
            f_minus = loss_fn().item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            denom = max(1.0, abs(a_flat[i]), abs(numeric))
            worst = max(worst, abs(a_flat[i] - numeric) / denom)
    return worst
