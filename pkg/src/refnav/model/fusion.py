"""Candidate-view feature fusion.

Each candidate view's base feature is extended with the pointer's top-3
in-view objects: a bi-LSTM encoding of their label tokens and the mean of
their visual features. Views with fewer than three objects are padded with
a reserved NULL label and zero visual features, so the fused dimension is
constant. The top-3 selection is hard (no gradient through the ranking);
gradients flow through the label encoder and, in training, through the
pointer's own ranking loss.
"""

from __future__ import annotations

import numpy as np

from ..nn import autodiff as ad
from ..nn import bilstm_encode
from ..nn.autodiff import Var
from .network import NavPointModel
from .pointer import ObjectContext, PointerQuery, rank_objects
from .vocab import NULL


def fuse_view(view_base: np.ndarray, contexts: list[ObjectContext],
              query: PointerQuery, model: NavPointModel) -> Var:
    """Fused feature [v_base, label-encoding, mean object visual] for one view."""
    cfg = model.config
    top = [obj for _, obj in rank_objects(query, contexts, model)[: cfg.top_k]]

    label_tokens: list[str] = []
    for obj in top:
        label_tokens.extend(obj.label_tokens)
    label_tokens.extend([NULL] * (cfg.top_k - len(top)))

    ids = model.vocab.encode(label_tokens)
    xs = [ad.index_row(model.word_emb, i) for i in ids]
    _, h0, hl = bilstm_encode(model.label_bilstm, xs)
    label_enc = ad.concat([h0, hl])

    visual = np.zeros(cfg.d_obj)
    for obj in top:
        visual = visual + obj.mean_cell
    visual = visual / cfg.top_k

    base = np.zeros_like(view_base) if cfg.lan_only else view_base
    return ad.concat([ad.constant(base), label_enc, ad.constant(visual)])
