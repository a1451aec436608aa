"""Episode wire service: a thin JSON adapter over the episode engine.

All task rules live in the engine; the server only manages sessions,
serializes observations/results, and enforces per-session action
sequencing. Observations additionally carry a schematic render payload
(labeled 2D boxes and navigable-marker screen positions per view) so UI
clients never re-derive geometry.

Endpoints:
    POST /sessions {env_id, task_id}        -> {session_id, observation}
    GET  /sessions/{id}/observation         -> {observation}
    POST /sessions/{id}/action {seq,action} -> {observation}|{result}
    GET  /sessions/{id}/result              -> {result}
    GET  /tasks                             -> {tasks: [...]}

Errors are {code, message} with 400 malformed, 404 unknown/expired
session, 409 conflicts (finished episode, second detection, bad sequence,
illegal move).
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .episode import (
    Action,
    EpisodeConfig,
    EpisodeError,
    EpisodeState,
    Observation,
    Trajectory,
    action_from_json,
    start_episode,
    step,
)
from .geometry import camera_pose, view_states
from .metrics import score_task
from .world import Environment, Task

DEFAULT_IDLE_TIMEOUT = 600.0  # seconds

_PALETTE = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0",
    "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff", "#9a6324",
    "#fffac8", "#800000", "#aaffc3", "#808000", "#ffd8b1", "#000075",
]


def object_color(env: Environment, object_id: str) -> str:
    ids = sorted(env.object_by_id)
    return _PALETTE[ids.index(object_id) % len(_PALETTE)]


def render_payload(env: Environment, obs: Observation,
                   config: EpisodeConfig) -> dict:
    """Per-view labeled boxes and navigable-marker screen positions."""
    intr = config.intrinsics
    p = env.position(obs.viewpoint)
    neighbor_markers: dict[int, list[dict]] = {}
    for nav in obs.navigable:
        target = env.position(nav.viewpoint_id)
        for state in view_states(obs.viewpoint):
            pose = camera_pose(p, state.heading, state.elevation)
            cam = pose.apply(target)
            if cam[2] <= 0.05:
                continue
            f = intr.focal
            x = intr.width / 2.0 - f * cam[0] / cam[2]
            y = intr.height / 2.0 - f * cam[1] / cam[2]
            if 0.0 <= x <= intr.width and 0.0 <= y <= intr.height:
                neighbor_markers.setdefault(state.k, []).append({
                    "viewpoint_id": nav.viewpoint_id,
                    "x": round(x, 2),
                    "y": round(y, 2),
                    "distance": round(nav.distance, 3),
                })
    boxes: dict[int, list[dict]] = {}
    for k, cands in obs.candidates.items():
        boxes[k] = [
            {
                "object_id": c.proj.object_id,
                "label": c.label,
                "category": c.category,
                "bbox": [round(v, 2) for v in c.proj.bbox.to_list()],
                "depth": round(c.proj.depth, 3),
                "color": object_color(env, c.proj.object_id),
            }
            for c in cands
        ]
    return {
        "boxes": {str(k): v for k, v in sorted(boxes.items())},
        "markers": {str(k): v for k, v in sorted(neighbor_markers.items())},
    }


def wire_observation(env: Environment, obs: Observation,
                     config: EpisodeConfig) -> dict:
    return {
        "instruction": list(obs.instruction),
        "viewpoint": obs.viewpoint,
        "heading": obs.heading,
        "elevation": obs.elevation,
        "step_count": obs.step_count,
        "nav_finished": obs.nav_finished,
        "views": [
            {
                "k": slot.state.k,
                "heading": slot.state.heading,
                "elevation": slot.state.elevation,
                "feature": slot.feature.tolist(),
            }
            for slot in obs.views
        ],
        "navigable": [
            {
                "viewpoint_id": nav.viewpoint_id,
                "rel_heading": nav.rel_heading,
                "rel_elevation": nav.rel_elevation,
                "distance": nav.distance,
                "view_k": nav.view_k,
            }
            for nav in obs.navigable
        ],
        "candidates": {
            str(k): [
                {
                    "object_id": c.proj.object_id,
                    "label": c.label,
                    "category": c.category,
                    "bbox": c.proj.bbox.to_list(),
                    "depth": c.proj.depth,
                }
                for c in cands
            ]
            for k, cands in sorted(obs.candidates.items())
        },
        "render": render_payload(env, obs, config),
    }


def wire_result(env: Environment, task: Task, state: EpisodeState,
                config: EpisodeConfig) -> dict:
    traj = Trajectory(
        task_id=task.id, path=state.path, actions=(),
        detection=state.detection, steps=state.step_count, wall_time=0.0)
    result = score_task(env, task, traj, config.intrinsics)
    return {
        "task_id": task.id,
        "trajectory": traj.to_json(),
        "nav_success": result.nav_success,
        "oracle_success": result.oracle_success,
        "grounding_success": result.grounding_success,
        "path_length": result.path_length,
        "shortest_length": result.shortest_length,
        "spl_term": result.spl_term,
    }


@dataclass
class Session:
    id: str
    env: Environment
    task: Task
    state: EpisodeState
    observation: Observation | None
    seq: int = 0
    created: float = field(default_factory=time.monotonic)
    last_active: float = field(default_factory=time.monotonic)
    last_response: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def finished(self) -> bool:
        return self.state.done


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def create_app(worlds: list[tuple[Environment, list[Task]]],
               config: EpisodeConfig = EpisodeConfig(),
               idle_timeout: float = DEFAULT_IDLE_TIMEOUT) -> FastAPI:
    envs = {env.id: env for env, _ in worlds}
    tasks: dict[str, tuple[Environment, Task]] = {}
    for env, ts in worlds:
        for t in ts:
            tasks[t.id] = (env, t)

    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    app = FastAPI(title="refnav episode service")
    # browser clients are served from a different origin than the API
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(_ApiError)
    async def on_api_error(request: Request, exc: _ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    def get_session(session_id: str) -> Session:
        with registry_lock:
            now = time.monotonic()
            for sid in [s for s, sess in sessions.items()
                        if now - sess.last_active > idle_timeout]:
                del sessions[sid]
            session = sessions.get(session_id)
        if session is None:
            raise _ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    async def parse_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise _ApiError(400, "malformed_body", "request body is not valid JSON")
        if not isinstance(body, dict):
            raise _ApiError(400, "malformed_body", "request body must be a JSON object")
        return body

    @app.get("/tasks")
    async def list_tasks():
        return {
            "tasks": [
                {
                    "task_id": t.id,
                    "env_id": env.id,
                    "instruction": list(t.instruction),
                    "start_viewpoint": t.start_viewpoint,
                }
                for env, t in (tasks[tid] for tid in sorted(tasks))
            ]
        }

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await parse_body(request)
        task_id = body.get("task_id")
        if not isinstance(task_id, str):
            raise _ApiError(400, "malformed_body", "task_id (string) is required")
        if task_id not in tasks:
            raise _ApiError(404, "unknown_task", f"no task {task_id!r}")
        env, task = tasks[task_id]
        env_id = body.get("env_id", env.id)
        if env_id != env.id:
            raise _ApiError(404, "unknown_environment",
                            f"task {task_id!r} does not belong to {env_id!r}")
        state, obs = start_episode(env, task, config)
        session = Session(id=uuid.uuid4().hex, env=env, task=task,
                          state=state, observation=obs)
        with registry_lock:
            sessions[session.id] = session
        return {
            "session_id": session.id,
            "observation": wire_observation(env, obs, config),
        }

    @app.get("/sessions/{session_id}/observation")
    async def get_observation(session_id: str):
        session = get_session(session_id)
        with session.lock:
            session.last_active = time.monotonic()
            if session.finished:
                raise _ApiError(409, "episode_finished",
                                "episode is finished; fetch the result instead")
            return {"observation": wire_observation(session.env, session.observation, config)}

    @app.post("/sessions/{session_id}/action")
    async def post_action(session_id: str, request: Request):
        body = await parse_body(request)
        session = get_session(session_id)
        if "seq" not in body or not isinstance(body["seq"], int):
            raise _ApiError(400, "malformed_body", "seq (integer) is required")
        try:
            action: Action = action_from_json(body.get("action", {}))
        except (ValueError, KeyError, TypeError) as exc:
            raise _ApiError(400, "malformed_body", f"bad action: {exc}")

        with session.lock:
            session.last_active = time.monotonic()
            seq = body["seq"]
            if seq == session.seq - 1 and session.last_response is not None:
                return session.last_response  # idempotent retry
            if seq != session.seq:
                raise _ApiError(409, "bad_sequence",
                                f"expected seq {session.seq}, got {seq}")
            if session.finished:
                raise _ApiError(409, "episode_finished",
                                "episode is finished; no more actions accepted")
            try:
                state, obs = step(session.env, session.state, action, config)
            except EpisodeError as exc:
                message = str(exc)
                code = "illegal_action"
                if "detection" in message:
                    code = "detection_already_made"
                elif "finished" in message:
                    code = "episode_finished"
                raise _ApiError(409, code, message)
            session.state = state
            session.observation = obs
            session.seq += 1
            if state.done:
                response = {"result": wire_result(session.env, session.task, state, config)}
            else:
                response = {"observation": wire_observation(session.env, obs, config)}
            session.last_response = response
            return response

    @app.get("/sessions/{session_id}/result")
    async def get_result(session_id: str):
        session = get_session(session_id)
        with session.lock:
            session.last_active = time.monotonic()
            if not session.finished:
                raise _ApiError(409, "episode_active", "episode is still running")
            return {"result": wire_result(session.env, session.task, session.state, config)}

    return app
