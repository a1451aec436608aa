"""Named trainable tensors: registration, SGD updates, checkpoints."""

from __future__ import annotations

import json
import math

import numpy as np

from .autodiff import Var

CHECKPOINT_VERSION = 1


class ParamStore:
    """Flat registry of leaf Vars. Every trainable tensor is registered
    exactly once; gradient accumulation and updates are single-writer."""

    def __init__(self):
        self._params: dict[str, Var] = {}

    def register(self, name: str, value: np.ndarray) -> Var:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        v = Var(np.asarray(value, dtype=np.float64), requires_grad=True)
        self._params[name] = v
        return v

    def __getitem__(self, name: str) -> Var:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return sorted(self._params)

    def items(self):
        return sorted(self._params.items())

    def n_values(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def grad_norm(self) -> float:
        total = 0.0
        for p in self._params.values():
            if p.grad is not None:
                total += float((p.grad ** 2).sum())
        return math.sqrt(total)

    def sgd_step(self, lr: float, clip_norm: float = 5.0):
        """In-place SGD update with global-norm gradient clipping."""
        norm = self.grad_norm()
        scale = 1.0
        if clip_norm > 0 and norm > clip_norm:
            scale = clip_norm / norm
        for p in self._params.values():
            if p.grad is not None:
                p.value -= lr * scale * p.grad

    def save(self, path):
        payload = {
            "format_version": CHECKPOINT_VERSION,
            "params": {
                name: {"shape": list(p.value.shape), "data": p.value.ravel().tolist()}
                for name, p in self.items()
            },
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f)

    def load(self, path):
        """Overwrite registered values from a checkpoint (names and shapes
        must match exactly)."""
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        if payload.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {payload.get('format_version')}")
        saved = payload["params"]
        if set(saved) != set(self._params):
            missing = set(self._params) ^ set(saved)
            raise ValueError(f"checkpoint parameter names do not match: {sorted(missing)}")
        for name, entry in saved.items():
            arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            if arr.shape != self._params[name].value.shape:
                raise ValueError(f"shape mismatch for {name!r}")
            self._params[name].value = arr


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)
