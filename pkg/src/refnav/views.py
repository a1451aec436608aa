"""View contents and deterministic pseudo-features.

Stands in for a renderer + CNN: what an agent "sees" in a view is the set
of nearby, unoccluded projected objects, and features are seeded hash
vectors that are bit-reproducible given the environment's feature_seed.
Feature vectors are information-bearing: view features mix a positional
hash with a bag of visible object categories, object features are
category-dominant with a per-instance component.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .geometry import (
    CameraIntrinsics,
    ProjectedObject,
    ViewState,
    camera_pose,
    occlusion_filter,
    project_box,
    view_states,
)
from .world import Environment, objects_near

MIN_VIEW_FEATURE_DIM = 8

_CAT_WEIGHT = 0.5   # bag-of-categories contribution to view features
_INSTANCE_WEIGHT = 0.25  # per-instance contribution to object features


def stable_seed(*parts) -> int:
    """Platform-independent 64-bit seed from a tuple of hashable parts."""
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def hash_vector(dim: int, *parts) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(stable_seed(*parts)))
    return rng.standard_normal(dim)


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        return np.zeros_like(v)
    return v / n


def visible_objects(env: Environment, state: ViewState,
                    intr: CameraIntrinsics = CameraIntrinsics()) -> list[ProjectedObject]:
    """Nearby objects that project into this view and survive occlusion,
    sorted by depth then id."""
    pose = camera_pose(env.position(state.viewpoint), state.heading, state.elevation)
    projs = []
    for obj in objects_near(env, state.viewpoint):
        hit = project_box(obj.box, pose, intr)
        if hit is not None:
            bbox, depth = hit
            projs.append(ProjectedObject(object_id=obj.id, bbox=bbox, depth=depth, view=state))
    kept = occlusion_filter(projs)
    kept.sort(key=lambda p: (p.depth, p.object_id))
    return kept


def viewpoint_views(env: Environment, viewpoint_id: str,
                    intr: CameraIntrinsics = CameraIntrinsics()) -> dict[int, list[ProjectedObject]]:
    """visible_objects for all 36 views at a viewpoint, keyed by k. Cached."""
    cache = env.cache("viewpoint_views")
    key = (viewpoint_id, intr)
    if key not in cache:
        cache[key] = {
            s.k: visible_objects(env, s, intr) for s in view_states(viewpoint_id)
        }
    return cache[key]


def object_visible_at(env: Environment, viewpoint_id: str, object_id: str,
                      intr: CameraIntrinsics = CameraIntrinsics()) -> bool:
    """True when the object survives visibility in at least one of the 36 views."""
    return any(
        p.object_id == object_id
        for projs in viewpoint_views(env, viewpoint_id, intr).values()
        for p in projs
    )


def view_position_component(env: Environment, state: ViewState, dim: int) -> np.ndarray:
    return _unit(hash_vector(dim, env.feature_seed, "view", state.viewpoint, state.k))


def category_vector(env: Environment, category: str, dim: int) -> np.ndarray:
    return _unit(hash_vector(dim, env.feature_seed, "category", category))


def view_feature(env: Environment, state: ViewState, dim: int,
                 intr: CameraIntrinsics = CameraIntrinsics()) -> np.ndarray:
    """Deterministic stand-in for a view's CNN feature.

    Sum of a positional hash (unit norm) and a half-weight bag of the
    categories visible in the view, so the norm always lands in [0.5, 1.5].
    """
    if dim < MIN_VIEW_FEATURE_DIM:
        raise ValueError(f"view feature dim must be >= {MIN_VIEW_FEATURE_DIM}")
    cache = env.cache("view_features")
    key = (state.viewpoint, state.k, dim, intr)
    if key in cache:
        return cache[key]
    pos = view_position_component(env, state, dim)
    bag = np.zeros(dim)
    for proj in viewpoint_views(env, state.viewpoint, intr)[state.k]:
        bag = bag + category_vector(env, env.object_by_id[proj.object_id].category, dim)
    feat = pos + _CAT_WEIGHT * _unit(bag)
    cache[key] = feat
    return feat


def object_base_feature(env: Environment, object_id: str, dim: int) -> np.ndarray:
    """Category-dominant instance embedding for one annotated object."""
    obj = env.object_by_id[object_id]
    cat = _unit(hash_vector(dim, env.feature_seed, "objcat", obj.category))
    inst = _unit(hash_vector(dim, env.feature_seed, "objid", obj.id))
    return cat + _INSTANCE_WEIGHT * inst


def object_feature(env: Environment, object_id: str, proj: ProjectedObject | None = None,
                   grid: int = 7, dim: int = 16) -> np.ndarray:
    """Per-cell features on a grid x grid in-box layout, shape (grid*grid, dim).

    Cells are the base embedding offset along two category-seeded directions
    by the cell's normalized coordinates; grid=1 returns exactly the base
    embedding.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    if proj is not None and proj.object_id != object_id:
        raise ValueError(f"projection is for {proj.object_id!r}, not {object_id!r}")
    cache = env.cache("object_features")
    key = (object_id, grid, dim)
    if key in cache:
        return cache[key]
    obj = env.object_by_id[object_id]
    base = object_base_feature(env, object_id, dim)
    ux = hash_vector(dim, env.feature_seed, "cellx", obj.category)
    uy = hash_vector(dim, env.feature_seed, "celly", obj.category)
    cells = np.empty((grid * grid, dim))
    for row in range(grid):
        cy = (row + 0.5) / grid
        for col in range(grid):
            cx = (col + 0.5) / grid
            cells[row * grid + col] = base + (cx - 0.5) * ux + (cy - 0.5) * uy
    cache[key] = cells
    return cells
