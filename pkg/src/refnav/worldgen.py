"""Seeded synthetic world generator.

Produces connected viewpoint graphs, oriented-box object annotations, and
template instructions. Generation is deterministic for a fixed seed, and
every emitted task satisfies the structural contract: the target is not
observable from the start viewpoint (any of the 36 views) and is observable
from every goal viewpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ANGLE_STEP,
    CameraIntrinsics,
    OrientedBox3D,
    camera_pose,
    project_box,
    view_states,
)
from .views import object_visible_at
from .world import (
    Edge,
    Environment,
    ObjectAnnotation,
    Task,
    ValidationError,
    Viewpoint,
    validate_task,
)

EYE_HEIGHT = 1.4

CATEGORIES = [
    "chair", "lamp", "vase", "mirror", "towel", "cushion", "picture", "plant",
    "bottle", "clock", "basket", "stool", "kettle", "candle", "globe", "radio",
    "ladder", "bucket", "easel", "trophy", "helmet", "drum", "telescope", "banner",
]

ATTRIBUTES = [
    "red", "blue", "green", "white", "black", "yellow", "wooden", "metal",
    "striped", "round", "tall", "small",
]

VERBS = ["find", "fetch", "check", "dust", "clean", "grab", "inspect", "polish"]

TEMPLATE_SETS = {
    "default": [
        "go to the {region} and {verb} the {target} near the {landmark}",
        "head to the {region} and {verb} the {target} beside the {landmark}",
        "{verb} the {target} near the {landmark} in the {region}",
    ],
    # used when the world has a single object (no landmark available)
    "no-landmark": [
        "go to the {region} and {verb} the {target}",
        "{verb} the {target} in the {region}",
    ],
}


class GenerationError(RuntimeError):
    """Constraints could not be satisfied within the retry budget."""


@dataclass(frozen=True)
class SynthesisParams:
    n_viewpoints: int
    n_objects: int
    n_categories: int = 8
    room_extent: float = 10.0
    rng_seed: int = 0
    instruction_template_set: str = "default"

    def __post_init__(self):
        if self.n_objects < 1:
            raise ValueError("n_objects must be >= 1")
        if self.n_viewpoints < 2:
            raise ValueError("n_viewpoints must be >= 2")
        if self.n_categories < 1:
            raise ValueError("n_categories must be >= 1")
        if self.instruction_template_set not in TEMPLATE_SETS:
            raise ValueError(
                f"unknown template set {self.instruction_template_set!r}")


def _sample_positions(rng: np.random.Generator, n: int, extent: float) -> list[np.ndarray]:
    lo, hi = min(1.0, extent / 4), max(extent - 1.0, extent * 3 / 4)
    min_sep = min(1.5, (hi - lo) / max(1.0, math.sqrt(n)))
    positions: list[np.ndarray] = []
    attempts = 0
    while len(positions) < n:
        attempts += 1
        if attempts > 200 * n:
            raise GenerationError("could not place viewpoints with the required separation")
        p = np.array([rng.uniform(lo, hi), rng.uniform(lo, hi), EYE_HEIGHT])
        if all(np.linalg.norm(p - q) >= min_sep for q in positions):
            positions.append(p)
    return positions


def _connect(viewpoints: list[Viewpoint]) -> list[Edge]:
    ids = [vp.id for vp in viewpoints]
    pos = {vp.id: vp.position_array for vp in viewpoints}

    def dist(a, b):
        return float(np.linalg.norm(pos[a] - pos[b]))

    pairs = set()
    for a in ids:
        near = sorted((dist(a, b), b) for b in ids if b != a)
        for _, b in near[: min(2, len(near))]:
            pairs.add(tuple(sorted((a, b))))

    # stitch components together through their closest cross pair
    def components():
        adj = {a: set() for a in ids}
        for a, b in pairs:
            adj[a].add(b)
            adj[b].add(a)
        seen, comps = set(), []
        for a in ids:
            if a in seen:
                continue
            comp, stack = {a}, [a]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if v not in comp:
                        comp.add(v)
                        stack.append(v)
            seen |= comp
            comps.append(sorted(comp))
        return comps

    comps = components()
    while len(comps) > 1:
        best = min(
            (dist(a, b), a, b)
            for a in comps[0]
            for other in comps[1:]
            for b in other
        )
        pairs.add(tuple(sorted((best[1], best[2]))))
        comps = components()

    return [Edge(a=a, b=b, length=dist(a, b)) for a, b in sorted(pairs)]


def _rotation_about_z(angle: float) -> tuple[tuple[float, float, float], ...]:
    c, s = math.cos(angle), math.sin(angle)
    return ((c, s, 0.0), (-s, c, 0.0), (0.0, 0.0, 1.0))


def _region_name(p: np.ndarray, extent: float) -> str:
    cx = cy = extent / 2.0
    dx, dy = p[0] - cx, p[1] - cy
    if math.hypot(dx, dy) < extent / 6.0:
        return "middle area"
    if abs(dy) >= abs(dx):
        return "north end" if dy > 0 else "south end"
    return "east side" if dx > 0 else "west side"


def generate_synthetic_world(params: SynthesisParams) -> tuple[Environment, list[Task]]:
    """Build one world plus one task per object, deterministically per seed."""
    rng = np.random.default_rng(params.rng_seed)
    env_id = f"world{params.rng_seed:04d}"

    positions = _sample_positions(rng, params.n_viewpoints, params.room_extent)
    viewpoints = [
        Viewpoint(id=f"vp{i:02d}", position=tuple(float(v) for v in p))
        for i, p in enumerate(positions)
    ]
    edges = _connect(viewpoints)

    cat_order = list(CATEGORIES)
    rng.shuffle(cat_order)
    categories = [cat_order[i % len(cat_order)] for i in range(params.n_categories)]

    # objects: anchored near a viewpoint. Placement checks are raw (distance
    # + projection, no occlusion) to stay cheap; the task phase below
    # re-validates against full visibility on the finished environment.
    intr = CameraIntrinsics()
    scratch_objects: list[ObjectAnnotation] = []
    for i in range(params.n_objects):
        placed = False
        for _ in range(300):
            anchor = viewpoints[int(rng.integers(0, len(viewpoints)))]
            radial = rng.uniform(0.9, 2.6)
            angle = rng.uniform(0.0, 2 * math.pi)
            zc = rng.uniform(0.4, 2.2)
            center = anchor.position_array + np.array(
                [radial * math.sin(angle), radial * math.cos(angle), zc - EYE_HEIGHT])
            radii = tuple(float(r) for r in rng.uniform(0.08, 0.35, size=3))
            box = OrientedBox3D(
                center=tuple(float(v) for v in center),
                axes=_rotation_about_z(float(rng.uniform(0.0, 2 * math.pi))),
                radii=radii,
            )
            category = categories[int(rng.integers(0, len(categories)))]
            attr = ATTRIBUTES[int(rng.integers(0, len(ATTRIBUTES)))]
            obj = ObjectAnnotation(
                id=f"obj{i:03d}", label=f"{attr} {category}", category=category, box=box)

            near_anchor = float(np.linalg.norm(center - anchor.position_array)) <= 3.0
            projects_at_anchor = any(
                project_box(box, camera_pose(anchor.position_array, s.heading, s.elevation), intr)
                for s in view_states(anchor.id)
            )
            beyond_some_vp = any(
                float(np.linalg.norm(center - vp.position_array)) > 3.0
                for vp in viewpoints
            )
            if near_anchor and projects_at_anchor and beyond_some_vp:
                scratch_objects.append(obj)
                placed = True
                break
        if not placed:
            raise GenerationError(
                f"object {i} could not be placed observable-somewhere but not everywhere")

    env = Environment(id=env_id, viewpoints=viewpoints, edges=edges,
                      objects=scratch_objects, feature_seed=params.rng_seed)

    tasks = synthesize_tasks(
        env, rng,
        room_extent=params.room_extent,
        template_set=params.instruction_template_set,
        id_prefix=f"{env_id}-t",
    )
    return env, tasks


def synthesize_tasks(env: Environment, rng: np.random.Generator,
                     room_extent: float = 10.0,
                     template_set: str = "default",
                     id_prefix: str | None = None,
                     target_ids: list[str] | None = None) -> list[Task]:
    """Template tasks for an existing environment, one per target object.

    Targets default to every object with a valid start/goal split. Start
    viewpoints are sampled among those from which the target is not
    observable in any of the 36 views.
    """
    if id_prefix is None:
        id_prefix = f"{env.id}-t"
    if target_ids is None:
        targets = list(env.objects)
    else:
        targets = [env.object_by_id[i] for i in target_ids]
    if len(env.objects) == 1:
        template_set = "no-landmark"
    templates = TEMPLATE_SETS[template_set]

    tasks: list[Task] = []
    for i, obj in enumerate(targets):
        goal_vps = tuple(
            vp.id for vp in env.viewpoints if object_visible_at(env, vp.id, obj.id))
        start_pool = [vp.id for vp in env.viewpoints if vp.id not in goal_vps]
        if not goal_vps or not start_pool:
            raise GenerationError(f"object {obj.id} has no valid start/goal split")
        start = start_pool[int(rng.integers(0, len(start_pool)))]

        others = [o for o in env.objects if o.id != obj.id]
        landmark = None
        if others:
            landmark = min(
                others,
                key=lambda o: (float(np.linalg.norm(o.box.center_array - obj.box.center_array)), o.id),
            )
        template = templates[int(rng.integers(0, len(templates)))]
        text = template.format(
            region=_region_name(obj.box.center_array, room_extent),
            verb=VERBS[int(rng.integers(0, len(VERBS)))],
            target=obj.label,
            landmark=landmark.label if landmark is not None else "",
        )
        instruction = tuple(text.split())

        tasks.append(Task(
            id=f"{id_prefix}{i:03d}",
            instruction=instruction,
            start_viewpoint=start,
            start_heading=float(int(rng.integers(0, 12)) * ANGLE_STEP),
            start_elevation=0.0,
            target_object=obj.id,
            goal_viewpoints=goal_vps,
        ))

    for t in tasks:
        try:
            validate_task(env, t)
        except ValidationError as exc:
            raise GenerationError(f"generated task failed validation: {exc}") from exc
    return tasks


def heldout_tasks(env: Environment, seed: int, n_tasks: int,
                  room_extent: float = 10.0) -> list[Task]:
    """Fresh same-distribution tasks for an existing world: new starts,
    headings, and phrasings over the world's objects."""
    rng = np.random.default_rng(seed)
    eligible = []
    for obj in env.objects:
        goals = [vp.id for vp in env.viewpoints if object_visible_at(env, vp.id, obj.id)]
        if goals and len(goals) < len(env.viewpoints):
            eligible.append(obj.id)
    if not eligible:
        raise GenerationError(f"{env.id}: no eligible task targets")
    chosen = [eligible[int(rng.integers(0, len(eligible)))] for _ in range(n_tasks)]
    return synthesize_tasks(
        env, rng, room_extent=room_extent,
        id_prefix=f"{env.id}-h{seed}-", target_ids=chosen)
