"""Evaluation metrics: navigation success, oracle success, SPL, path
length, and grounding success, plus aggregation into report tables.

Success semantics: the agent must stop within 3 m of the target with the
target actually visible there (at least one of the 36 views, after
occlusion). Oracle success applies the same test at every visited
viewpoint. Grounding success additionally requires the detection to be
right: the chosen candidate is the target, or the emitted bbox overlaps
the target's ground-truth bbox in the named view with IoU >= 0.5.
All functions are pure and embarrassingly parallel across tasks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .episode import TrajectoryRecord
from .geometry import CameraIntrinsics, iou
from .views import object_visible_at, viewpoint_views
from .world import Environment, PROXIMITY_RADIUS, Task, shortest_lengths_from

SUCCESS_RADIUS = PROXIMITY_RADIUS  # meters
IOU_THRESHOLD = 0.5


class ScoringError(ValueError):
    """Trajectory is malformed with respect to the environment/task."""


def _target_center(env: Environment, task: Task) -> np.ndarray:
    return env.object_by_id[task.target_object].box.center_array


def _within_radius(env: Environment, task: Task, viewpoint_id: str) -> bool:
    d = float(np.linalg.norm(env.position(viewpoint_id) - _target_center(env, task)))
    return d <= SUCCESS_RADIUS


def _success_at(env: Environment, task: Task, viewpoint_id: str,
                intr: CameraIntrinsics) -> bool:
    return (_within_radius(env, task, viewpoint_id)
            and object_visible_at(env, viewpoint_id, task.target_object, intr))


def _check_path(env: Environment, task: Task, path: tuple[str, ...]) -> None:
    if not path:
        raise ScoringError(f"task {task.id}: empty path")
    if path[0] != task.start_viewpoint:
        raise ScoringError(
            f"task {task.id}: path starts at {path[0]!r}, not {task.start_viewpoint!r}")
    for a, b in zip(path, path[1:]):
        if b not in env.neighbors.get(a, {}):
            raise ScoringError(f"task {task.id}: {a!r} and {b!r} are not adjacent")


def nav_success(env: Environment, task: Task, traj: TrajectoryRecord,
                intr: CameraIntrinsics = CameraIntrinsics()) -> bool:
    _check_path(env, task, traj.path)
    return _success_at(env, task, traj.path[-1], intr)


def oracle_success(env: Environment, task: Task, traj: TrajectoryRecord,
                   intr: CameraIntrinsics = CameraIntrinsics()) -> bool:
    _check_path(env, task, traj.path)
    return any(_success_at(env, task, vp, intr) for vp in set(traj.path))


def path_length(env: Environment, traj: TrajectoryRecord) -> float:
    total = 0.0
    for a, b in zip(traj.path, traj.path[1:]):
        try:
            total += env.neighbors[a][b]
        except KeyError:
            raise ScoringError(f"{a!r} and {b!r} are not adjacent") from None
    return total


def grounding_success(env: Environment, task: Task, traj: TrajectoryRecord,
                      intr: CameraIntrinsics = CameraIntrinsics()) -> bool:
    """Correct target identification within 3 m (either detection variant)."""
    _check_path(env, task, traj.path)
    det = traj.detection
    if det is None:
        return False
    vp = traj.path[-1]  # detection ends the episode, so it happened here
    if not _success_at(env, task, vp, intr):
        return False
    if det.kind == "candidate":
        return det.object_id == task.target_object
    truth = next(
        (p.bbox for p in viewpoint_views(env, vp, intr).get(det.view_k, [])
         if p.object_id == task.target_object),
        None,
    )
    return truth is not None and iou(det.bbox, truth) >= IOU_THRESHOLD


def shortest_goal_length(env: Environment, task: Task) -> float:
    """Shortest-path length from the start to the nearest goal viewpoint."""
    dists = shortest_lengths_from(env, task.start_viewpoint)
    try:
        return min(dists[g] for g in task.goal_viewpoints)
    except KeyError as exc:
        raise ScoringError(f"task {task.id}: unknown goal viewpoint {exc}") from exc


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    nav_success: bool
    oracle_success: bool
    grounding_success: bool
    path_length: float
    shortest_length: float

    @property
    def spl_term(self) -> float:
        if not self.nav_success:
            return 0.0
        denom = max(self.shortest_length, self.path_length)
        if denom == 0.0:
            return 1.0
        return self.shortest_length / denom


def score_task(env: Environment, task: Task, traj: TrajectoryRecord,
               intr: CameraIntrinsics = CameraIntrinsics()) -> TaskResult:
    return TaskResult(
        task_id=task.id,
        nav_success=nav_success(env, task, traj, intr),
        oracle_success=oracle_success(env, task, traj, intr),
        grounding_success=grounding_success(env, task, traj, intr),
        path_length=path_length(env, traj),
        shortest_length=shortest_goal_length(env, task),
    )


def spl(results: list[TaskResult]) -> float:
    if not results:
        raise ScoringError("cannot compute SPL over zero tasks")
    return sum(r.spl_term for r in results) / len(results)


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate numbers: rates in percent, length in meters."""

    n_tasks: int
    success: float
    oracle_success: float
    spl: float
    length: float
    grounding_success: float
    per_task: tuple[TaskResult, ...]

    def to_json(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "success": self.success,
            "oracle_success": self.oracle_success,
            "spl": self.spl,
            "length": self.length,
            "grounding_success": self.grounding_success,
        }


def aggregate(results: list[TaskResult]) -> MetricsReport:
    if not results:
        raise ScoringError("cannot aggregate zero tasks")
    n = len(results)
    return MetricsReport(
        n_tasks=n,
        success=100.0 * sum(r.nav_success for r in results) / n,
        oracle_success=100.0 * sum(r.oracle_success for r in results) / n,
        spl=100.0 * spl(results),
        length=sum(r.path_length for r in results) / n,
        grounding_success=100.0 * sum(r.grounding_success for r in results) / n,
        per_task=tuple(results),
    )


def score_trajectories(task_index: dict[str, tuple[Environment, Task]],
                       records: list[TrajectoryRecord],
                       intr: CameraIntrinsics = CameraIntrinsics()) -> MetricsReport:
    """Score recorded trajectories; `task_index` maps task id -> (env, task)."""
    results = []
    for rec in records:
        if rec.task_id not in task_index:
            raise ScoringError(f"unknown task id {rec.task_id!r}")
        env, task = task_index[rec.task_id]
        results.append(score_task(env, task, rec, intr))
    return aggregate(results)
