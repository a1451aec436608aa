"""Training losses: teacher-forced navigation loss (cross-entropy over
candidates plus progress-monitor MSE) and the pointer's margin ranking
loss, combined into one total."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..episode import Move, Observation, start_episode, step
from ..nn import autodiff as ad
from ..nn.autodiff import Var
from ..world import Environment, Task, shortest_lengths_from, shortest_path
from .navigator import (
    action_index_for,
    build_candidates,
    encode_instruction,
    nav_step,
)
from .network import NavPointModel, STOP_ACTION_INDEX
from .pointer import ObjectContext, encode_pointer, pointer_score


@dataclass(frozen=True)
class StepRecord:
    observation: Observation
    teacher_index: int  # 0 = stop, 1+i = obs.navigable[i]
    progress_target: float


@dataclass(frozen=True)
class EpisodeRecord:
    env: Environment
    task: Task
    steps: tuple[StepRecord, ...]


def nearest_goal(env: Environment, task: Task) -> tuple[str, float]:
    dists = shortest_lengths_from(env, task.start_viewpoint)
    return min(((dists[g], g) for g in task.goal_viewpoints))[::-1]


def goal_distance(env: Environment, task: Task, viewpoint: str) -> float:
    dists = shortest_lengths_from(env, viewpoint)
    return min(dists[g] for g in task.goal_viewpoints)


def progress_target(d0: float, dt: float) -> float:
    if d0 <= 0.0:
        return 1.0
    return min(max((d0 - dt) / d0, 0.0), 1.0)


def build_teacher_record(env: Environment, task: Task,
                         model: NavPointModel) -> EpisodeRecord:
    """Roll the shortest path to the nearest goal viewpoint and record the
    teacher action plus progress target at every decision."""
    goal, _ = nearest_goal(env, task)
    path = shortest_path(env, task.start_viewpoint, goal).viewpoints
    d0 = goal_distance(env, task, task.start_viewpoint)

    config = model.config.episode_config()
    state, obs = start_episode(env, task, config)
    steps = []
    for i, viewpoint in enumerate(path):
        target = progress_target(d0, goal_distance(env, task, viewpoint))
        if i + 1 < len(path):
            nxt = path[i + 1]
            teacher = next(
                1 + j for j, nav in enumerate(obs.navigable) if nav.viewpoint_id == nxt)
            steps.append(StepRecord(obs, teacher, target))
            state, obs = step(env, state, Move(nxt), config)
        else:
            steps.append(StepRecord(obs, 0, target))
    return EpisodeRecord(env=env, task=task, steps=tuple(steps))


def loss_nav(model: NavPointModel, record: EpisodeRecord) -> Var:
    """-lambda1 * sum log p[teacher] + (1 - lambda1) * sum (target - p_pm)^2."""
    cfg = model.config
    query = encode_pointer(record.task.instruction, model)
    x_matrix, h, c = encode_instruction(record.task.instruction, model)
    a_prev = STOP_ACTION_INDEX
    ce_terms, pm_terms = [], []
    for rec in record.steps:
        candidates = build_candidates(record.env, rec.observation, query, model)
        ns = nav_step(model, x_matrix, candidates, h, c, a_prev)
        ce_terms.append(-ad.index_item(ad.log_softmax(ns.logits), rec.teacher_index))
        diff = ns.progress - ad.constant(np.asarray(rec.progress_target))
        pm_terms.append(ad.square(diff))
        h, c = ns.h, ns.c
        chosen = candidates[rec.teacher_index]
        a_prev = action_index_for(candidates, chosen.viewpoint_id)

    ce = ce_terms[0]
    for t in ce_terms[1:]:
        ce = ce + t
    pm = pm_terms[0]
    for t in pm_terms[1:]:
        pm = pm + t
    return ce * cfg.lambda1 + pm * (1.0 - cfg.lambda1)


@dataclass(frozen=True)
class PointerExample:
    """One ranking group: a view's objects, the positive object index, and
    the positive/negative instructions."""

    contexts: tuple[ObjectContext, ...]
    positive_index: int
    tokens: tuple[str, ...]
    negative_tokens: tuple[str, ...] | None = None
    negative_index: int | None = None


def loss_exp(model: NavPointModel, examples: list[PointerExample]) -> Var:
    """Margin ranking loss over (object, expression) pairs."""
    cfg = model.config
    margin = ad.constant(np.asarray(cfg.margin))
    total = None
    for ex in examples:
        contexts = list(ex.contexts)
        pos_obj = contexts[ex.positive_index]
        q_pos = encode_pointer(ex.tokens, model)
        s_pos, _ = pointer_score(q_pos, pos_obj, contexts, model)

        terms = []
        if ex.negative_tokens is not None:
            q_neg = encode_pointer(ex.negative_tokens, model)
            s_wrong_expr, _ = pointer_score(q_neg, pos_obj, contexts, model)
            terms.append(ad.relu(margin + s_wrong_expr - s_pos) * cfg.lambda2)
        if ex.negative_index is not None:
            neg_obj = contexts[ex.negative_index]
            s_wrong_obj, _ = pointer_score(q_pos, neg_obj, contexts, model)
            terms.append(ad.relu(margin + s_wrong_obj - s_pos) * cfg.lambda3)
        for t in terms:
            total = t if total is None else total + t
    if total is None:
        return ad.constant(np.asarray(0.0))
    return total


def loss_total(model: NavPointModel, record: EpisodeRecord,
               examples: list[PointerExample]) -> Var:
    return loss_nav(model, record) + loss_exp(model, examples) * model.config.lambda4
