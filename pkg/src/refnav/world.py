"""Environment data model: viewpoint graph, object annotations, tasks.

Environments are immutable after load and safe to share across concurrent
episodes. File formats are versioned JSON (format_version 1); see README.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import OrientedBox3D

FORMAT_VERSION = 1
EDGE_LENGTH_TOL = 1e-6
PROXIMITY_RADIUS = 3.0  # object-to-viewpoint distance gate, meters


class EnvironmentFormatError(ValueError):
    """The file does not parse as the environment/task format."""


class ValidationError(ValueError):
    """A structural invariant is violated; message names the first failure."""


@dataclass(frozen=True)
class Viewpoint:
    id: str
    position: tuple[float, float, float]

    @property
    def position_array(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class ObjectAnnotation:
    id: str
    label: str
    category: str
    box: OrientedBox3D


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    length: float


@dataclass(frozen=True)
class Task:
    id: str
    instruction: tuple[str, ...]
    start_viewpoint: str
    start_heading: float
    start_elevation: float
    target_object: str
    goal_viewpoints: tuple[str, ...]


class Environment:
    """Validated viewpoint graph with object annotations.

    Read-only after construction; derived lookups (adjacency, caches) are
    built once here.
    """

    def __init__(self, id: str, viewpoints: list[Viewpoint], edges: list[Edge],
                 objects: list[ObjectAnnotation], feature_seed: int):
        self.id = id
        self.viewpoints = list(viewpoints)
        self.edges = list(edges)
        self.objects = list(objects)
        self.feature_seed = int(feature_seed)

        self.viewpoint_by_id = {}
        for vp in self.viewpoints:
            if vp.id in self.viewpoint_by_id:
                raise ValidationError(f"duplicate viewpoint id {vp.id!r}")
            if not np.all(np.isfinite(vp.position_array)):
                raise ValidationError(f"viewpoint {vp.id!r} has non-finite coordinates")
            self.viewpoint_by_id[vp.id] = vp

        self.object_by_id = {}
        for obj in self.objects:
            if obj.id in self.object_by_id:
                raise ValidationError(f"duplicate object id {obj.id!r}")
            if not obj.label:
                raise ValidationError(f"object {obj.id!r} has an empty label")
            if not obj.category:
                raise ValidationError(f"object {obj.id!r} has an empty category")
            self.object_by_id[obj.id] = obj

        self.neighbors: dict[str, dict[str, float]] = {vp.id: {} for vp in self.viewpoints}
        seen_pairs = set()
        for e in self.edges:
            for end in (e.a, e.b):
                if end not in self.viewpoint_by_id:
                    raise ValidationError(f"edge references unknown viewpoint {end!r}")
            if e.a == e.b:
                raise ValidationError(f"edge {e.a!r}-{e.b!r} is a self-loop")
            pair = tuple(sorted((e.a, e.b)))
            if pair in seen_pairs:
                raise ValidationError(f"duplicate edge {pair[0]!r}-{pair[1]!r}")
            seen_pairs.add(pair)
            dist = float(np.linalg.norm(
                self.viewpoint_by_id[e.a].position_array
                - self.viewpoint_by_id[e.b].position_array))
            if abs(dist - e.length) > EDGE_LENGTH_TOL:
                raise ValidationError(
                    f"edge {e.a!r}-{e.b!r} length {e.length} != endpoint distance {dist}")
            self.neighbors[e.a][e.b] = e.length
            self.neighbors[e.b][e.a] = e.length

        if len(self.viewpoints) > 0:
            start = self.viewpoints[0].id
            reached = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for v in self.neighbors[u]:
                    if v not in reached:
                        reached.add(v)
                        stack.append(v)
            if len(reached) != len(self.viewpoints):
                missing = sorted(set(self.viewpoint_by_id) - reached)[0]
                raise ValidationError(f"graph is not connected: {missing!r} unreachable")

        # per-environment caches owned by other modules (views, episode)
        self._caches: dict[str, dict] = {}

    def cache(self, name: str) -> dict:
        return self._caches.setdefault(name, {})

    def __eq__(self, other):
        return isinstance(other, Environment) and self.to_json() == other.to_json()

    def position(self, viewpoint_id: str) -> np.ndarray:
        return self.viewpoint_by_id[viewpoint_id].position_array

    def to_json(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "id": self.id,
            "feature_seed": self.feature_seed,
            "viewpoints": [{"id": vp.id, "position": list(vp.position)}
                           for vp in self.viewpoints],
            "edges": [{"a": e.a, "b": e.b, "length": e.length} for e in self.edges],
            "objects": [{"id": o.id, "label": o.label, "category": o.category,
                         "box": o.box.to_json()} for o in self.objects],
        }


@dataclass(frozen=True)
class Path:
    viewpoints: tuple[str, ...]
    length: float


def shortest_path(env: Environment, start: str, goal: str) -> Path:
    """Minimal-length path; equal-length ties break to the lexicographically
    smallest id sequence."""
    for vp in (start, goal):
        if vp not in env.viewpoint_by_id:
            raise KeyError(f"unknown viewpoint {vp!r}")
    if start == goal:
        return Path((start,), 0.0)
    heap = [(0.0, (start,))]
    settled = set()
    while heap:
        dist, path = heapq.heappop(heap)
        u = path[-1]
        if u in settled:
            continue
        settled.add(u)
        if u == goal:
            return Path(path, dist)
        for v, w in sorted(env.neighbors[u].items()):
            if v not in settled:
                heapq.heappush(heap, (dist + w, path + (v,)))
    raise ValidationError(f"no path from {start!r} to {goal!r}")


def shortest_lengths_from(env: Environment, start: str) -> dict[str, float]:
    """Dijkstra distances from one viewpoint to every viewpoint."""
    if start not in env.viewpoint_by_id:
        raise KeyError(f"unknown viewpoint {start!r}")
    dist = {start: 0.0}
    heap = [(0.0, start)]
    settled = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        for v, w in env.neighbors[u].items():
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def objects_near(env: Environment, viewpoint_id: str,
                 radius: float = PROXIMITY_RADIUS) -> list[ObjectAnnotation]:
    """Objects whose box center lies within `radius` (closed) of the
    viewpoint, sorted by distance then id."""
    p = env.position(viewpoint_id)
    found = []
    for obj in env.objects:
        d = float(np.linalg.norm(obj.box.center_array - p))
        if d <= radius:
            found.append((d, obj.id, obj))
    found.sort(key=lambda t: (t[0], t[1]))
    return [obj for _, _, obj in found]


def _require(cond: bool, message: str):
    if not cond:
        raise ValidationError(message)


def environment_from_json(data: dict) -> Environment:
    try:
        version = data["format_version"]
        if version != FORMAT_VERSION:
            raise EnvironmentFormatError(f"unsupported format_version {version}")
        viewpoints = [Viewpoint(id=str(v["id"]), position=tuple(float(c) for c in v["position"]))
                      for v in data["viewpoints"]]
        edges = [Edge(a=str(e["a"]), b=str(e["b"]), length=float(e["length"]))
                 for e in data["edges"]]
        objects = [ObjectAnnotation(id=str(o["id"]), label=str(o["label"]),
                                    category=str(o["category"]),
                                    box=OrientedBox3D.from_json(o["box"]))
                   for o in data["objects"]]
        return Environment(id=str(data["id"]), viewpoints=viewpoints, edges=edges,
                           objects=objects, feature_seed=int(data["feature_seed"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise EnvironmentFormatError(f"malformed environment file: {exc}") from exc


def load_environment(path) -> Environment:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise EnvironmentFormatError(f"{path}: {exc}") from exc
    return environment_from_json(data)


def save_environment(env: Environment, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(env.to_json(), f, indent=2, sort_keys=True)
        f.write("\n")


def task_to_json(task: Task) -> dict:
    return {
        "id": task.id,
        "instruction": list(task.instruction),
        "start_viewpoint": task.start_viewpoint,
        "start_heading": task.start_heading,
        "start_elevation": task.start_elevation,
        "target_object": task.target_object,
        "goal_viewpoints": list(task.goal_viewpoints),
    }


def task_from_json(obj: dict) -> Task:
    try:
        return Task(
            id=str(obj["id"]),
            instruction=tuple(str(t) for t in obj["instruction"]),
            start_viewpoint=str(obj["start_viewpoint"]),
            start_heading=float(obj["start_heading"]),
            start_elevation=float(obj["start_elevation"]),
            target_object=str(obj["target_object"]),
            goal_viewpoints=tuple(str(v) for v in obj["goal_viewpoints"]),
        )
    except (KeyError, TypeError) as exc:
        raise EnvironmentFormatError(f"malformed task entry: {exc}") from exc


def validate_task(env: Environment, task: Task) -> None:
    _require(len(task.instruction) >= 1, f"task {task.id!r}: empty instruction")
    _require(task.start_viewpoint in env.viewpoint_by_id,
             f"task {task.id!r}: unknown start viewpoint {task.start_viewpoint!r}")
    _require(task.target_object in env.object_by_id,
             f"task {task.id!r}: unknown target object {task.target_object!r}")
    _require(len(task.goal_viewpoints) >= 1, f"task {task.id!r}: no goal viewpoints")
    target = env.object_by_id[task.target_object]
    for vp in task.goal_viewpoints:
        _require(vp in env.viewpoint_by_id,
                 f"task {task.id!r}: unknown goal viewpoint {vp!r}")
        d = float(np.linalg.norm(env.position(vp) - target.box.center_array))
        _require(d <= PROXIMITY_RADIUS + EDGE_LENGTH_TOL,
                 f"task {task.id!r}: goal viewpoint {vp!r} is {d:.3f} m from the target")


def load_tasks(path, env: Environment | None = None) -> list[Task]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise EnvironmentFormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or "tasks" not in data:
        raise EnvironmentFormatError(f"{path}: expected an object with a 'tasks' array")
    if data.get("format_version") != FORMAT_VERSION:
        raise EnvironmentFormatError(
            f"{path}: unsupported format_version {data.get('format_version')}")
    tasks = [task_from_json(obj) for obj in data["tasks"]]
    if env is not None:
        for t in tasks:
            validate_task(env, t)
    return tasks


def save_tasks(tasks: list[Task], path) -> None:
    payload = {"format_version": FORMAT_VERSION,
               "tasks": [task_to_json(t) for t in tasks]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
