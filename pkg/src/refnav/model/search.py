"""Frontier search with backtracking over the viewpoint graph.

The planner keeps a candidate priority queue keyed by accumulated logit
and an ending queue of every expanded viewpoint. Per-step logits enter the
accumulation after log-softmax normalization (the same reading the
navigation loss uses), so an entry's key is the log-likelihood of the
action sequence reaching it; an ending entry additionally includes the
stop log-prob at that viewpoint, making it the score of the completed
"go there and stop" sequence. Only the best frontier entry is expanded;
the physical path walks real graph edges, backtracking through visited
viewpoints when the frontier jumps. The search ends when a stop candidate
is popped, the frontier empties, or the move budget would be exceeded; the
agent then walks to the best-scoring ending-queue viewpoint, stops, and
points at its best-matching object. Ties always break to the smaller
viewpoint id.

The planner only consumes engine Observations (plus the environment for
object features), so its trajectories replay exactly through the engine
and the wire protocol.
"""

from __future__ import annotations

import dataclasses
import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..episode import (
    Detect,
    Detection,
    Move,
    Observation,
    Stop,
    Trajectory,
    run_agent,
)
from ..geometry import BBox2D
from ..nn import autodiff as ad
from ..world import Environment, Task
from .navigator import build_candidates, encode_instruction, nav_step
from .network import NavPointModel, STOP_ACTION_INDEX
from .pointer import best_detection, encode_pointer, view_contexts


@dataclass(order=True)
class _Entry:
    sort_key: tuple = field(compare=True)
    viewpoint: str = field(compare=False)
    acc_logit: float = field(compare=False)
    is_stop: bool = field(compare=False)
    h: np.ndarray | None = field(compare=False, default=None)
    c: np.ndarray | None = field(compare=False, default=None)
    a_prev: int = field(compare=False, default=STOP_ACTION_INDEX)


class FrontierPlanner:
    """Per-episode stateful agent implementing the queue search."""

    def __init__(self, env: Environment, task: Task, model: NavPointModel,
                 max_steps: int | None = None):
        self.env = env
        self.task = task
        self.model = model
        self.max_steps = model.config.max_steps if max_steps is None else max_steps

        self.query = encode_pointer(task.instruction, model)
        x_matrix, h0, c0 = encode_instruction(task.instruction, model)
        self.x_matrix = x_matrix
        self.root = _Entry(
            sort_key=(0.0, task.start_viewpoint, 0),
            viewpoint=task.start_viewpoint,
            acc_logit=0.0,
            is_stop=False,
            h=h0.value.copy(),
            c=c0.value.copy(),
            a_prev=STOP_ACTION_INDEX,
        )

        self.frontier: list[_Entry] = []
        self.ending: list[tuple[float, str]] = []
        self.visited: set[str] = set()
        self.known: dict[str, set[str]] = {}
        self.pending: deque[str] = deque()
        self.arrival: _Entry | None = self.root
        self.moves_used = 0
        self.seq = 0
        self.phase = "search"  # search -> stopping -> detecting -> done

    # -- known-graph helpers ------------------------------------------------

    def _link(self, a: str, b: str):
        self.known.setdefault(a, set()).add(b)
        self.known.setdefault(b, set()).add(a)

    def _route(self, src: str, dst: str) -> list[str]:
        """Fewest-hop route on the known graph, deterministic tie-break."""
        if src == dst:
            return [src]
        prev = {src: None}
        q = deque([src])
        while q:
            u = q.popleft()
            for v in sorted(self.known.get(u, ())):
                if v not in prev:
                    prev[v] = u
                    if v == dst:
                        path = [v]
                        while prev[path[-1]] is not None:
                            path.append(prev[path[-1]])
                        return list(reversed(path))
                    q.append(v)
        raise RuntimeError(f"no known route {src!r} -> {dst!r}")

    def _hops(self, src: str, dst: str) -> int:
        return len(self._route(src, dst)) - 1

    def _push(self, entry: _Entry):
        heapq.heappush(self.frontier, entry)

    # -- agent interface ----------------------------------------------------

    def __call__(self, obs: Observation):
        if self.pending:
            self.moves_used += 1
            return Move(self.pending.popleft())
        if self.phase == "stopping":
            self.phase = "detecting"
            return Stop()
        if self.phase == "detecting":
            self.phase = "done"
            return self._detect(obs)
        return self._plan(obs)

    def _plan(self, obs: Observation):
        entry = self.arrival
        self.arrival = None
        if entry is not None and obs.viewpoint == entry.viewpoint:
            self._expand(entry, obs)

        while True:
            if not self.frontier:
                return self._finish(obs)
            nxt = heapq.heappop(self.frontier)
            if nxt.is_stop:
                return self._finish(obs)
            if nxt.viewpoint in self.visited:
                continue
            route = self._route(obs.viewpoint, nxt.viewpoint)
            best_end = self._ending_argmax()
            reserve = self._hops(nxt.viewpoint, best_end)
            if self.moves_used + (len(route) - 1) + reserve > self.max_steps:
                return self._finish(obs)
            self.arrival = nxt
            self.pending.extend(route[1:])
            self.moves_used += 1
            return Move(self.pending.popleft())

    def _expand(self, entry: _Entry, obs: Observation):
        vp = obs.viewpoint
        self.visited.add(vp)
        for nav in obs.navigable:
            self._link(vp, nav.viewpoint_id)

        candidates = build_candidates(self.env, obs, self.query, self.model)
        ns = nav_step(self.model, self.x_matrix, candidates,
                      ad.constant(entry.h), ad.constant(entry.c), entry.a_prev)
        raw = ns.logits.value
        logits = raw - np.log(np.exp(raw - raw.max()).sum()) - raw.max()
        h, c = ns.h.value.copy(), ns.c.value.copy()

        stop_score = entry.acc_logit + float(logits[0])
        self.ending.append((stop_score, vp))
        self.seq += 1
        self._push(_Entry(
            sort_key=(-stop_score, vp, self.seq),
            viewpoint=vp,
            acc_logit=stop_score,
            is_stop=True,
        ))
        for i, nav in enumerate(obs.navigable):
            u = nav.viewpoint_id
            if u in self.visited:
                continue
            acc = entry.acc_logit + float(logits[1 + i])
            self.seq += 1
            self._push(_Entry(
                sort_key=(-acc, u, self.seq),
                viewpoint=u,
                acc_logit=acc,
                is_stop=False,
                h=h,
                c=c,
                a_prev=candidates[1 + i].view_k,
            ))

    def _ending_argmax(self) -> str:
        best_acc, best_vp = self.ending[0]
        for acc, vp in self.ending[1:]:
            if acc > best_acc or (acc == best_acc and vp < best_vp):
                best_acc, best_vp = acc, vp
        return best_vp

    def _finish(self, obs: Observation):
        final = self._ending_argmax()
        route = self._route(obs.viewpoint, final)
        self.pending.extend(route[1:])
        self.phase = "stopping"
        if self.pending:
            self.moves_used += 1
            return Move(self.pending.popleft())
        self.phase = "detecting"
        return Stop()

    def _detect(self, obs: Observation):
        contexts_by_view = {
            k: view_contexts(self.env, obs, k, self.model.config)
            for k in sorted(obs.candidates)
        }
        choice = best_detection(self.query, contexts_by_view, self.model)
        if choice is not None:
            return Detect(Detection(kind="candidate", object_id=choice))
        intr = self.model.config.episode_config().intrinsics
        center_box = BBox2D(intr.width / 2.0 - 0.5, intr.height / 2.0 - 0.5, 1.0, 1.0)
        return Detect(Detection(kind="bbox", view_k=obs.facing_view_k(), bbox=center_box))


def frontier_search(env: Environment, task: Task, model: NavPointModel,
                    max_steps: int | None = None) -> Trajectory:
    """Run the queue-search agent on one task and return its trajectory."""
    config = model.config.episode_config()
    if max_steps is not None and max_steps > config.max_steps:
        config = dataclasses.replace(config, max_steps=max_steps)

    def make(env_, task_):
        return FrontierPlanner(env_, task_, model, max_steps)

    return run_agent(env, [task], make, config)[0]
