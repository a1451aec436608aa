"""Two-phase training: the pointer's ranking loss first, then the
navigator with interaction fusion under teacher forcing.

Training is plain SGD with global-norm gradient clipping and is
deterministic for a fixed seed. The loss curve is exported as CSV rows
(phase, epoch, loss).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ..episode import CandidateObject
from ..views import viewpoint_views
from ..world import Environment, Task
from .config import ModelConfig
from .losses import (
    EpisodeRecord,
    PointerExample,
    build_teacher_record,
    loss_exp,
    loss_nav,
)
from .network import NavPointModel, build_model
from .pointer import object_context
from .vocab import Vocab


@dataclass
class TrainConfig:
    seed: int = 0
    lr: float = 0.05
    pointer_epochs: int = 15
    nav_epochs: int = 12
    clip_norm: float = 5.0
    max_steps: int = 40
    lan_only: bool = False


_FIELD_PARSERS = {
    "seed": int,
    "lr": float,
    "pointer_epochs": int,
    "nav_epochs": int,
    "clip_norm": float,
    "max_steps": int,
    "lan_only": lambda raw: raw.lower() in ("1", "true", "yes"),
}


def parse_train_config(path) -> TrainConfig:
    """Flat key = value file; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    kwargs = {}
    for name, parser in _FIELD_PARSERS.items():
        if name in values:
            kwargs[name] = parser(values.pop(name))
    if values:
        raise ValueError(f"unknown training config keys: {sorted(values)}")
    return TrainConfig(**kwargs)


def format_train_config(cfg: TrainConfig) -> str:
    return "".join(f"{f_.name} = {getattr(cfg, f_.name)}\n" for f_ in fields(TrainConfig))


def build_pointer_examples(env: Environment, task: Task,
                           model_config: ModelConfig,
                           views_per_goal: int = 3) -> list[PointerExample]:
    """Ranking examples at each goal viewpoint, taken from the views where
    the target shows largest, with every in-view object as context."""
    intr = model_config.episode_config().intrinsics
    examples = []
    for goal in task.goal_viewpoints:
        views = viewpoint_views(env, goal, intr)
        showing = []  # (-area, k)
        for k in sorted(views):
            for proj in views[k]:
                if proj.object_id == task.target_object:
                    showing.append((-proj.bbox.area, k))
        for _, k in sorted(showing)[:views_per_goal]:
            contexts = tuple(
                object_context(env, CandidateObject(
                    proj=proj,
                    label=env.object_by_id[proj.object_id].label,
                    category=env.object_by_id[proj.object_id].category,
                ), model_config)
                for proj in views[k]
            )
            pos = next(i for i, c in enumerate(contexts) if c.object_id == task.target_object)
            examples.append(PointerExample(
                contexts=contexts, positive_index=pos, tokens=task.instruction))
    return examples


@dataclass
class TrainResult:
    model: NavPointModel
    curve: list[tuple[str, int, float]]  # (phase, epoch, loss)


def _with_negatives(ex: PointerExample, all_instructions: list[tuple[str, ...]],
                    rng: np.random.Generator,
                    n_object_negatives: int = 3) -> list[PointerExample]:
    """Attach uniformly sampled in-view object negatives (up to
    `n_object_negatives` per call) and one wrong-instruction negative."""
    neg_tokens = None
    pool = [ins for ins in all_instructions if ins != ex.tokens]
    if pool:
        neg_tokens = pool[int(rng.integers(0, len(pool)))]
    others = [i for i in range(len(ex.contexts)) if i != ex.positive_index]
    picks: list[int | None]
    if others:
        k = min(n_object_negatives, len(others))
        picks = list(rng.choice(len(others), size=k, replace=False))
        picks = [others[int(i)] for i in picks]
    else:
        picks = [None]
    out = []
    for j, neg_index in enumerate(picks):
        out.append(PointerExample(
            contexts=ex.contexts,
            positive_index=ex.positive_index,
            tokens=ex.tokens,
            negative_tokens=neg_tokens if j == 0 else None,
            negative_index=neg_index,
        ))
    return out


def train(worlds: list[tuple[Environment, list[Task]]], train_config: TrainConfig,
          model_config: ModelConfig | None = None) -> TrainResult:
    """Train on every task of every world; returns the model + loss curve."""
    if model_config is None:
        model_config = ModelConfig()
    if train_config.lan_only or model_config.lan_only:
        model_config = model_config.with_lan_only(True)
    if train_config.max_steps != model_config.max_steps:
        model_config = replace(model_config, max_steps=train_config.max_steps)

    envs = [env for env, _ in worlds]
    all_tasks = [t for _, ts in worlds for t in ts]
    vocab = Vocab.build(envs, all_tasks)
    model = build_model(model_config, vocab, seed=train_config.seed)

    pointer_sets: list[list[PointerExample]] = []
    task_list: list[tuple[Environment, Task]] = []
    for env, tasks in worlds:
        for task in tasks:
            exs = build_pointer_examples(env, task, model_config)
            if exs:
                pointer_sets.append(exs)
                task_list.append((env, task))
    all_instructions = [t.instruction for _, t in task_list]
    flat_examples = [ex for exs in pointer_sets for ex in exs]

    curve: list[tuple[str, int, float]] = []
    rng = np.random.default_rng(train_config.seed + 1)

    def guard(value: float, where: str):
        if not math.isfinite(value):
            raise RuntimeError(f"training diverged: non-finite loss in {where}")

    for epoch in range(train_config.pointer_epochs):
        order = rng.permutation(len(flat_examples))
        losses = []
        for idx in order:
            exs = _with_negatives(flat_examples[idx], all_instructions, rng)
            model.store.zero_grad()
            loss = loss_exp(model, exs)
            value = loss.item()
            guard(value, f"pointer epoch {epoch}")
            loss.backward()
            model.store.sgd_step(train_config.lr, train_config.clip_norm)
            losses.append(value)
        curve.append(("pointer", epoch, float(np.mean(losses))))

    records: list[EpisodeRecord] = [
        build_teacher_record(env, task, model) for env, task in task_list
    ]

    for epoch in range(train_config.nav_epochs):
        order = rng.permutation(len(records))
        losses = []
        for idx in order:
            record = records[idx]
            exs = _with_negatives(
                pointer_sets[idx][int(rng.integers(0, len(pointer_sets[idx])))],
                all_instructions, rng, n_object_negatives=1)
            model.store.zero_grad()
            loss = loss_nav(model, record) + loss_exp(model, exs) * model_config.lambda4
            value = loss.item()
            guard(value, f"navigator epoch {epoch}")
            loss.backward()
            model.store.sgd_step(train_config.lr, train_config.clip_norm)
            losses.append(value)
        curve.append(("navigator", epoch, float(np.mean(losses))))

    return TrainResult(model=model, curve=curve)


def write_loss_curve(path, curve: list[tuple[str, int, float]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("phase,epoch,loss\n")
        for phase, epoch, loss in curve:
            f.write(f"{phase},{epoch},{loss!r}\n")
