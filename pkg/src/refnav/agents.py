"""Baseline agents and the benchmark runner.

Agents are per-episode state machines created by a factory
`make(env, task) -> callable(Observation) -> Action`; the factory is the
only coupling point with the engine. Random walks a seeded uniform path of
at most 10 moves and picks a uniform candidate at its stop viewpoint;
Shortest walks the shortest path to the nearest goal viewpoint and detects
through a pluggable pointer; StopNow ends immediately with no detection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .episode import (
    Detect,
    Detection,
    EpisodeConfig,
    Move,
    Observation,
    Stop,
    Trajectory,
    run_agent,
)
from .geometry import BBox2D
from .metrics import MetricsReport, aggregate, score_task
from .views import stable_seed
from .world import Environment, Task, shortest_lengths_from, shortest_path

MAX_RANDOM_STEPS = 10


@dataclass(frozen=True)
class AgentConfig:
    kind: str  # random | shortest | stopnow | navpoint
    seed: int = 0
    max_random_steps: int = MAX_RANDOM_STEPS
    checkpoint: str | None = None


def random_agent(seed: int, max_random_steps: int = MAX_RANDOM_STEPS):
    """Factory for the seeded random baseline.

    The per-task stream is derived from (seed, task id) so results do not
    depend on task order. The step budget is uniform over 0..max steps;
    detection is a uniform choice among the objects visible at the stop
    viewpoint, or a degenerate centered 1x1 bbox when none are.
    """

    def make(env: Environment, task: Task):
        rng = np.random.Generator(np.random.PCG64(stable_seed(seed, "random-agent", task.id)))
        budget = int(rng.integers(0, max_random_steps + 1))
        state = {"moves": 0, "stopped": False}

        def act(obs: Observation):
            if state["moves"] < budget and not state["stopped"] and obs.navigable:
                state["moves"] += 1
                pick = int(rng.integers(0, len(obs.navigable)))
                return Move(obs.navigable[pick].viewpoint_id)
            if not state["stopped"]:
                state["stopped"] = True
                return Stop()
            pool = sorted({c.proj.object_id for objs in obs.candidates.values() for c in objs})
            if pool:
                choice = pool[int(rng.integers(0, len(pool)))]
                return Detect(Detection(kind="candidate", object_id=choice))
            return Detect(Detection(
                kind="bbox", view_k=obs.facing_view_k(),
                bbox=BBox2D(319.5, 239.5, 1.0, 1.0)))

        return act

    return make


def ground_truth_pointer(env: Environment, task: Task, obs: Observation) -> Detection:
    return Detection(kind="candidate", object_id=task.target_object)


def shortest_agent(pointer=ground_truth_pointer):
    """Factory for the shortest-path baseline.

    Walks to the nearest goal viewpoint (ties by goal id), stops, then
    detects via `pointer(env, task, obs) -> Detection`.
    """

    def make(env: Environment, task: Task):
        dists = shortest_lengths_from(env, task.start_viewpoint)
        _, goal = min((dists[g], g) for g in task.goal_viewpoints)
        plan = list(shortest_path(env, task.start_viewpoint, goal).viewpoints[1:])
        state = {"stopped": False}

        def act(obs: Observation):
            if plan:
                return Move(plan.pop(0))
            if not state["stopped"]:
                state["stopped"] = True
                return Stop()
            return Detect(pointer(env, task, obs))

        return act

    return make


def stopnow_agent():
    """Stops immediately and ends the episode with no detection."""

    def make(env: Environment, task: Task):
        def act(obs: Observation):
            return Stop()

        return act

    return make


def navpoint_agent(model):
    """Factory wrapping the trained navigator/pointer planner."""
    from .model.search import FrontierPlanner

    def make(env: Environment, task: Task):
        return FrontierPlanner(env, task, model)

    return make


def model_pointer(model):
    """Trained-pointer detection head for the Shortest agent."""
    from .model.pointer import best_detection, encode_pointer, view_contexts

    def pointer(env: Environment, task: Task, obs: Observation) -> Detection:
        query = encode_pointer(task.instruction, model)
        contexts_by_view = {
            k: view_contexts(env, obs, k, model.config) for k in sorted(obs.candidates)
        }
        choice = best_detection(query, contexts_by_view, model)
        if choice is None:
            return Detection(kind="bbox", view_k=obs.facing_view_k(),
                             bbox=BBox2D(319.5, 239.5, 1.0, 1.0))
        return Detection(kind="candidate", object_id=choice)

    return pointer


def make_agent_factory(config: AgentConfig):
    if config.kind == "random":
        return random_agent(config.seed, config.max_random_steps)
    if config.kind == "shortest":
        return shortest_agent()
    if config.kind == "stopnow":
        return stopnow_agent()
    if config.kind == "navpoint":
        if not config.checkpoint:
            raise ValueError("navpoint agent needs a checkpoint path")
        from .model.network import load_checkpoint
        return navpoint_agent(load_checkpoint(config.checkpoint))
    raise ValueError(f"unknown agent kind {config.kind!r}")


def run_suite(worlds: list[tuple[Environment, list[Task]]], make_agent,
              config: EpisodeConfig = EpisodeConfig()) -> tuple[MetricsReport, list[Trajectory]]:
    """Roll an agent over every task of every world and score it."""
    results, trajectories = [], []
    for env, tasks in worlds:
        trajs = run_agent(env, tasks, make_agent, config)
        trajectories.extend(trajs)
        for task, traj in zip(tasks, trajs):
            results.append(score_task(env, task, traj, config.intrinsics))
    return aggregate(results), trajectories


def run_benchmark(worlds: list[tuple[Environment, list[Task]]],
                  agents: dict[str, object],
                  config: EpisodeConfig = EpisodeConfig()) -> dict[str, MetricsReport]:
    """One metrics row per named agent factory."""
    return {name: run_suite(worlds, make, config)[0] for name, make in agents.items()}
