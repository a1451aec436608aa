"""Modular referring-expression pointer.

An instruction is decomposed into subject / location / relationship phrase
embeddings via per-module word attention over a bi-LSTM; each candidate
object is scored by three small MLPs against those phrases and the final
score is the learned weighted sum. Object appearance comes from the
deterministic grid features, location from bbox geometry relative to up to
five same-category neighbors, relationships from the other in-view objects
regardless of category.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..episode import CandidateObject, Observation
from ..geometry import BBox2D, CameraIntrinsics
from ..nn import autodiff as ad
from ..nn import bilstm_encode, linear, mlp2
from ..nn.autodiff import Var
from ..views import object_feature
from ..world import Environment
from .config import ModelConfig
from .network import NavPointModel, POINTER_MODULES


@dataclass(frozen=True)
class ObjectContext:
    """Everything the pointer needs to know about one visible object."""

    object_id: str
    category: str
    label_tokens: tuple[str, ...]
    cells: np.ndarray       # (grid*grid, d_obj)
    mean_cell: np.ndarray   # (d_obj,)
    bbox: BBox2D
    depth: float


def object_context(env: Environment, cand: CandidateObject,
                   config: ModelConfig) -> ObjectContext:
    cells = object_feature(env, cand.proj.object_id, cand.proj,
                           grid=config.grid, dim=config.d_obj)
    if config.lan_only:
        cells = np.zeros_like(cells)
    return ObjectContext(
        object_id=cand.proj.object_id,
        category=cand.category,
        label_tokens=tuple(cand.label.split()),
        cells=cells,
        mean_cell=cells.mean(axis=0),
        bbox=cand.proj.bbox,
        depth=cand.proj.depth,
    )


def view_contexts(env: Environment, obs: Observation, view_k: int,
                  config: ModelConfig) -> list[ObjectContext]:
    return [object_context(env, c, config) for c in obs.candidates.get(view_k, ())]


@dataclass(frozen=True)
class PointerQuery:
    """Per-module phrase embeddings, word attentions, and module weights."""

    q: dict[str, Var]
    attn: dict[str, Var]
    module_weights: Var  # (3,) summing to 1


def encode_pointer(tokens, model: NavPointModel) -> PointerQuery:
    ids = model.vocab.encode(tokens)
    xs = [ad.index_row(model.word_emb, i) for i in ids]
    states, h0, hl = bilstm_encode(model.ptr_bilstm, xs)
    e_matrix = ad.stack_rows(states)  # (L, 2*pointer_hidden)
    q, attn = {}, {}
    for m_idx, m in enumerate(POINTER_MODULES):
        scores = ad.matmul(e_matrix, ad.index_row(model.ptr_att, m_idx))
        a = ad.softmax(scores)
        attn[m] = a
        q[m] = ad.matmul(a, e_matrix)
    w = ad.softmax(linear(model.ptr_module_weights, ad.concat([h0, hl])))
    return PointerQuery(q=q, attn=attn, module_weights=w)


def _scalar(v: Var) -> Var:
    return ad.vsum(v)  # (1,) -> scalar


def subject_feature(obj: ObjectContext, query: PointerQuery,
                    model: NavPointModel) -> Var:
    """Query-attended sum over the object's grid cells."""
    cells = ad.constant(obj.cells)
    scores = ad.matmul(cells, ad.matmul(model.subj_att, query.q["subj"]))
    return ad.matmul(ad.softmax(scores), cells)


def _rel5(a: BBox2D, b: BBox2D) -> list[float]:
    """Normalized center offset, size ratios, and area ratio of b vs a."""
    ax, ay = a.center
    bx, by = b.center
    return [
        (bx - ax) / max(a.w, 1.0),
        (by - ay) / max(a.h, 1.0),
        b.w / max(a.w, 1e-6),
        b.h / max(a.h, 1e-6),
        b.area / max(a.area, 1e-12),
    ]


def _own5(b: BBox2D, intr: CameraIntrinsics) -> list[float]:
    return [
        b.x / intr.width,
        b.y / intr.height,
        b.x2 / intr.width,
        b.y2 / intr.height,
        b.area / (intr.width * intr.height),
    ]


def _nearest(obj: ObjectContext, others: list[ObjectContext], same_category: bool,
             limit: int) -> list[ObjectContext]:
    pool = [
        o for o in others
        if o.object_id != obj.object_id
        and (not same_category or o.category == obj.category)
    ]
    ax, ay = obj.bbox.center

    def dist(o: ObjectContext) -> float:
        bx, by = o.bbox.center
        return float(np.hypot(bx - ax, by - ay))

    pool.sort(key=lambda o: (dist(o), o.object_id))
    return pool[:limit]


def location_vector(obj: ObjectContext, others: list[ObjectContext],
                    config: ModelConfig,
                    intr: CameraIntrinsics = CameraIntrinsics()) -> np.ndarray:
    """Own-position block plus zero-padded slots for up to `loc_slots`
    same-category neighbors."""
    parts = _own5(obj.bbox, intr)
    neighbors = _nearest(obj, others, same_category=True, limit=config.loc_slots)
    for o in neighbors:
        parts.extend(_rel5(obj.bbox, o.bbox))
    parts.extend([0.0] * (5 * (config.loc_slots - len(neighbors))))
    return np.asarray(parts)


def pointer_score(query: PointerQuery, obj: ObjectContext,
                  others: list[ObjectContext], model: NavPointModel,
                  intr: CameraIntrinsics = CameraIntrinsics()) -> tuple[Var, dict[str, Var]]:
    """Weighted-sum match score S plus the three per-module scores."""
    cfg = model.config
    s_subj = _scalar(mlp2(model.f_subj, ad.concat([subject_feature(obj, query, model),
                                                   query.q["subj"]])))
    loc = ad.tanh(linear(model.loc_lin, ad.constant(location_vector(obj, others, cfg, intr))))
    s_loc = _scalar(mlp2(model.f_loc, ad.concat([loc, query.q["loc"]])))

    rel_neighbors = _nearest(obj, others, same_category=False, limit=cfg.rel_slots)
    if rel_neighbors:
        per_neighbor = [
            _scalar(mlp2(model.f_rel, ad.concat([
                ad.constant(np.concatenate([o.mean_cell, np.asarray(_rel5(obj.bbox, o.bbox))])),
                query.q["rel"],
            ])))
            for o in rel_neighbors
        ]
        s_rel = ad.max_of(per_neighbor)
    else:
        s_rel = _scalar(mlp2(model.f_rel, ad.concat([
            ad.constant(np.zeros(cfg.d_obj + 5)), query.q["rel"]])))

    modules = {"subj": s_subj, "loc": s_loc, "rel": s_rel}
    w = query.module_weights
    total = None
    for i, m in enumerate(POINTER_MODULES):
        term = ad.mul(ad.index_item(w, i), modules[m])
        total = term if total is None else total + term
    return total, modules


def rank_objects(query: PointerQuery, contexts: list[ObjectContext],
                 model: NavPointModel,
                 intr: CameraIntrinsics = CameraIntrinsics()) -> list[tuple[float, ObjectContext]]:
    """Objects of one view sorted by descending score, ties by id."""
    scored = []
    for obj in contexts:
        s, _ = pointer_score(query, obj, contexts, model, intr)
        scored.append((float(s.value), obj))
    scored.sort(key=lambda t: (-t[0], t[1].object_id))
    return scored


def best_detection(query: PointerQuery, contexts_by_view: dict[int, list[ObjectContext]],
                   model: NavPointModel,
                   intr: CameraIntrinsics = CameraIntrinsics()) -> str | None:
    """Highest-scoring object id at a viewpoint, or None if nothing is visible.

    Each unique object is scored once, in the view where it shows largest
    (ties to the smaller view index), so scores are comparable across
    objects that appear in several views.
    """
    canonical: dict[str, tuple[float, int]] = {}  # id -> (-area, k)
    for k in sorted(contexts_by_view):
        for obj in contexts_by_view[k]:
            key = (-obj.bbox.area, k)
            if obj.object_id not in canonical or key < canonical[obj.object_id]:
                canonical[obj.object_id] = key
    best: tuple[float, str] | None = None
    for k in sorted(contexts_by_view):
        contexts = [o for o in contexts_by_view[k] if canonical[o.object_id][1] == k]
        scores = {
            o.object_id: s
            for s, o in rank_objects_within(query, contexts, contexts_by_view[k], model, intr)
        }
        for object_id, score in scores.items():
            key = (-score, object_id)
            if best is None or key < best:
                best = key
    return best[1] if best is not None else None


def rank_objects_within(query: PointerQuery, subset: list[ObjectContext],
                        full_view: list[ObjectContext], model: NavPointModel,
                        intr: CameraIntrinsics = CameraIntrinsics()) -> list[tuple[float, ObjectContext]]:
    """Score `subset` against the full view's objects as context."""
    scored = []
    for obj in subset:
        s, _ = pointer_score(query, obj, full_view, model, intr)
        scored.append((float(s.value), obj))
    scored.sort(key=lambda t: (-t[0], t[1].object_id))
    return scored
