"""Episode state machine: observations, move/stop/detect, trajectories.

One episode is single-session; distinct episodes over the same shared
Environment may run concurrently. Transitions are functional: `step`
returns a new state and never mutates the environment.

Protocol summary: Move walks to a navigable neighbor (Move to the current
viewpoint means Stop). Stop finishes navigation but leaves the episode open
for a single Detect; a second Stop closes the episode with no detection.
Detect may happen at any step and always ends the episode; the detection
can be made at most once.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    ANGLE_STEP,
    BBox2D,
    CameraIntrinsics,
    HEADING_COUNT,
    ProjectedObject,
    ViewState,
    view_index_for_direction,
    view_states,
)
from .views import view_feature, viewpoint_views
from .world import Environment, Task

DEFAULT_MAX_STEPS = 40


class EpisodeError(RuntimeError):
    """Illegal transition (bad move target, action after the episode ended,
    second detection attempt)."""


@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int = DEFAULT_MAX_STEPS
    intrinsics: CameraIntrinsics = CameraIntrinsics()
    view_feature_dim: int = 32


@dataclass(frozen=True)
class Detection:
    """Either a candidate choice (object id) or a bbox in a named view."""

    kind: str  # "candidate" | "bbox"
    object_id: str | None = None
    view_k: int | None = None
    bbox: BBox2D | None = None

    def __post_init__(self):
        if self.kind == "candidate":
            if not self.object_id or self.view_k is not None or self.bbox is not None:
                raise ValueError("candidate detection carries exactly an object id")
        elif self.kind == "bbox":
            if self.object_id is not None or self.view_k is None or self.bbox is None:
                raise ValueError("bbox detection carries exactly a view index and a bbox")
        else:
            raise ValueError(f"unknown detection kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "candidate":
            return {"kind": "candidate", "object_id": self.object_id}
        return {"kind": "bbox", "view_k": self.view_k, "bbox": self.bbox.to_list()}

    @classmethod
    def from_json(cls, obj: dict) -> "Detection":
        if obj["kind"] == "candidate":
            return cls(kind="candidate", object_id=str(obj["object_id"]))
        x, y, w, h = (float(v) for v in obj["bbox"])
        return cls(kind="bbox", view_k=int(obj["view_k"]), bbox=BBox2D(x, y, w, h))


@dataclass(frozen=True)
class Move:
    viewpoint_id: str


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Detect:
    detection: Detection


Action = Move | Stop | Detect


def action_to_json(action: Action) -> dict:
    if isinstance(action, Move):
        return {"type": "move", "viewpoint_id": action.viewpoint_id}
    if isinstance(action, Stop):
        return {"type": "stop"}
    return {"type": "detect", "detection": action.detection.to_json()}


def action_from_json(obj: dict) -> Action:
    kind = obj.get("type")
    if kind == "move":
        return Move(viewpoint_id=str(obj["viewpoint_id"]))
    if kind == "stop":
        return Stop()
    if kind == "detect":
        return Detect(detection=Detection.from_json(obj["detection"]))
    raise ValueError(f"unknown action type {kind!r}")


@dataclass(frozen=True)
class EpisodeState:
    task: Task
    viewpoint: str
    heading: float
    elevation: float
    step_count: int
    nav_finished: bool
    done: bool
    detection: Detection | None
    path: tuple[str, ...]


@dataclass(frozen=True)
class ViewSlot:
    state: ViewState
    feature: np.ndarray


@dataclass(frozen=True)
class NavigableOption:
    viewpoint_id: str
    rel_heading: float
    rel_elevation: float
    distance: float
    view_k: int


@dataclass(frozen=True)
class CandidateObject:
    """A simulator-provided detection candidate in one view."""

    proj: ProjectedObject
    label: str
    category: str


@dataclass(frozen=True)
class Observation:
    instruction: tuple[str, ...]
    viewpoint: str
    heading: float
    elevation: float
    step_count: int
    nav_finished: bool
    views: tuple[ViewSlot, ...]
    navigable: tuple[NavigableOption, ...]
    candidates: dict[int, tuple[CandidateObject, ...]]

    def facing_view_k(self) -> int:
        h = int(round(self.heading / ANGLE_STEP)) % HEADING_COUNT
        e = min(max(int(round(self.elevation / ANGLE_STEP)), -1), 1) + 1
        return HEADING_COUNT * e + h + 1


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def observe(env: Environment, state: EpisodeState, config: EpisodeConfig) -> Observation:
    """Panoramic observation of the current state: 36 views with features,
    navigable neighbors, and candidate objects per view."""
    p = env.position(state.viewpoint)
    views = tuple(
        ViewSlot(state=s, feature=view_feature(env, s, config.view_feature_dim, config.intrinsics))
        for s in view_states(state.viewpoint)
    )
    navigable = []
    for nbr, dist in sorted(env.neighbors[state.viewpoint].items()):
        d = env.position(nbr) - p
        abs_heading = math.atan2(d[0], d[1])
        abs_elev = math.atan2(d[2], math.hypot(d[0], d[1]))
        navigable.append(NavigableOption(
            viewpoint_id=nbr,
            rel_heading=_wrap_angle(abs_heading - state.heading),
            rel_elevation=abs_elev - state.elevation,
            distance=dist,
            view_k=view_index_for_direction(d),
        ))
    candidates = {}
    for k, projs in viewpoint_views(env, state.viewpoint, config.intrinsics).items():
        if projs:
            candidates[k] = tuple(
                CandidateObject(
                    proj=pr,
                    label=env.object_by_id[pr.object_id].label,
                    category=env.object_by_id[pr.object_id].category,
                )
                for pr in projs
            )
    return Observation(
        instruction=state.task.instruction,
        viewpoint=state.viewpoint,
        heading=state.heading,
        elevation=state.elevation,
        step_count=state.step_count,
        nav_finished=state.nav_finished,
        views=views,
        navigable=tuple(navigable),
        candidates=candidates,
    )


def start_episode(env: Environment, task: Task,
                  config: EpisodeConfig = EpisodeConfig()) -> tuple[EpisodeState, Observation]:
    if task.start_viewpoint not in env.viewpoint_by_id:
        raise EpisodeError(f"task {task.id!r}: unknown start viewpoint")
    if task.target_object not in env.object_by_id:
        raise EpisodeError(f"task {task.id!r}: unknown target object")
    state = EpisodeState(
        task=task,
        viewpoint=task.start_viewpoint,
        heading=task.start_heading,
        elevation=task.start_elevation,
        step_count=0,
        nav_finished=False,
        done=False,
        detection=None,
        path=(task.start_viewpoint,),
    )
    return state, observe(env, state, config)


def step(env: Environment, state: EpisodeState, action: Action,
         config: EpisodeConfig = EpisodeConfig()) -> tuple[EpisodeState, Observation | None]:
    """Apply one action; returns the new state and the next observation, or
    None once the episode has ended."""
    if state.done:
        raise EpisodeError("episode already finished")

    if isinstance(action, Detect):
        if state.detection is not None:
            raise EpisodeError("detection already made; only one output is allowed")
        new = replace(state, detection=action.detection, nav_finished=True, done=True)
        return new, None

    if isinstance(action, Move) and action.viewpoint_id == state.viewpoint:
        action = Stop()  # choosing the current viewpoint means stop

    if isinstance(action, Stop):
        if state.nav_finished:
            return replace(state, done=True), None
        new = replace(state, nav_finished=True)
        return new, observe(env, new, config)

    # Move to a neighbor
    if state.nav_finished:
        raise EpisodeError("navigation already finished; only stop or detect is allowed")
    target = action.viewpoint_id
    if target not in env.neighbors[state.viewpoint]:
        raise EpisodeError(
            f"illegal move target {target!r} from {state.viewpoint!r}")
    d = env.position(target) - env.position(state.viewpoint)
    new = replace(
        state,
        viewpoint=target,
        heading=math.atan2(d[0], d[1]) % (2 * math.pi),
        elevation=0.0,
        step_count=state.step_count + 1,
        nav_finished=(state.step_count + 1 >= config.max_steps),
        path=state.path + (target,),
    )
    return new, observe(env, new, config)


@dataclass(frozen=True)
class Trajectory:
    task_id: str
    path: tuple[str, ...]
    actions: tuple[Action, ...]
    detection: Detection | None
    steps: int
    wall_time: float

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "path": list(self.path),
            "detection": None if self.detection is None else self.detection.to_json(),
            "steps": self.steps,
        }


def run_agent(env: Environment, tasks: list[Task], make_agent,
              config: EpisodeConfig = EpisodeConfig()) -> list[Trajectory]:
    """Roll one episode per task. `make_agent(env, task)` returns a callable
    Observation -> Action; errors are re-raised tagged with the task id."""
    trajectories = []
    for task in tasks:
        agent = make_agent(env, task)
        t0 = time.perf_counter()
        try:
            state, obs = start_episode(env, task, config)
            actions = []
            while not state.done:
                action = agent(obs)
                actions.append(action)
                state, obs = step(env, state, action, config)
        except EpisodeError as exc:
            raise EpisodeError(f"task {task.id}: {exc}") from exc
        trajectories.append(Trajectory(
            task_id=task.id,
            path=state.path,
            actions=tuple(actions),
            detection=state.detection,
            steps=state.step_count,
            wall_time=time.perf_counter() - t0,
        ))
    return trajectories


def actions_for_replay(path: tuple[str, ...], detection: Detection | None) -> list[Action]:
    """Reconstruct the action sequence a recorded trajectory implies."""
    actions: list[Action] = [Move(vp) for vp in path[1:]]
    if detection is None:
        actions += [Stop(), Stop()]
    else:
        actions.append(Detect(detection))
    return actions


def write_trajectories(path, trajectories: list[Trajectory]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in trajectories:
            f.write(json.dumps(t.to_json(), sort_keys=True) + "\n")


@dataclass(frozen=True)
class TrajectoryRecord:
    task_id: str
    path: tuple[str, ...]
    detection: Detection | None
    steps: int


def read_trajectories(path) -> list[TrajectoryRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(TrajectoryRecord(
                    task_id=str(obj["task_id"]),
                    path=tuple(str(v) for v in obj["path"]),
                    detection=None if obj.get("detection") is None
                    else Detection.from_json(obj["detection"]),
                    steps=int(obj["steps"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    return records
