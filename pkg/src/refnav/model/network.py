"""Parameter construction for the navigator/pointer model.

Every learnable tensor lives in one ParamStore so gradient accumulation,
checkpointing, and the gradient checker see a single flat registry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..nn import (
    BiLstmParams,
    LinearParams,
    LstmParams,
    MlpParams,
    ParamStore,
    glorot_uniform,
)
from .config import ModelConfig
from .vocab import Vocab

STOP_ACTION_INDEX = 0  # action-embedding row for "stop"/episode start
ACTION_TABLE_ROWS = 37  # stop + the 36 view indices

POINTER_MODULES = ("subj", "loc", "rel")


@dataclass(frozen=True)
class NavPointModel:
    config: ModelConfig
    vocab: Vocab
    store: ParamStore
    word_emb: object  # Var (|V|, d_word)
    instr_lstm: LstmParams
    w_x: object  # Var (d_text, d_text)
    w_v: object  # Var (d_g, d_text)
    w_a: object  # Var (d_g, 2*d_text)
    g_lin: LinearParams
    ctx_lstm: LstmParams
    pm_lin: LinearParams
    action_table: object  # Var (37, d_action)
    ptr_bilstm: BiLstmParams
    ptr_att: object  # Var (3, 2*pointer_hidden)
    ptr_module_weights: LinearParams  # -> 3 logits
    subj_att: object  # Var (d_obj, 2*pointer_hidden)
    loc_lin: LinearParams
    f_subj: MlpParams
    f_loc: MlpParams
    f_rel: MlpParams
    label_bilstm: BiLstmParams

    @property
    def word_dim(self) -> int:
        return self.config.d_word

    @property
    def query_dim(self) -> int:
        return 2 * self.config.pointer_hidden


def build_model(config: ModelConfig, vocab: Vocab, seed: int = 0) -> NavPointModel:
    rng = np.random.default_rng(seed)
    store = ParamStore()
    c = config
    e = 2 * c.pointer_hidden
    if c.d_label % 2 != 0:
        raise ValueError("d_label must be even (two bi-LSTM directions)")

    word_emb = store.register(
        "word_emb", glorot_uniform(rng, len(vocab), c.d_word, (len(vocab), c.d_word)))
    instr_lstm = LstmParams.create(store, "instr_lstm", c.d_word, c.d_text, rng)
    w_x = store.register("w_x", glorot_uniform(rng, c.d_text, c.d_text, (c.d_text, c.d_text)))
    w_v = store.register("w_v", glorot_uniform(rng, c.d_text, c.d_g, (c.d_g, c.d_text)))
    w_a = store.register("w_a", glorot_uniform(rng, 2 * c.d_text, c.d_g, (c.d_g, 2 * c.d_text)))
    g_lin = LinearParams.create(store, "g_lin", c.fused_dim, c.d_g, rng)
    ctx_in = c.d_text + c.fused_dim + c.d_action
    ctx_lstm = LstmParams.create(store, "ctx_lstm", ctx_in, c.d_text, rng)
    pm_lin = LinearParams.create(store, "pm_lin", 2 * c.d_text, 1, rng)
    action_table = store.register(
        "action_table", glorot_uniform(rng, ACTION_TABLE_ROWS, c.d_action,
                                       (ACTION_TABLE_ROWS, c.d_action)))

    ptr_bilstm = BiLstmParams.create(store, "ptr_bilstm", c.d_word, c.pointer_hidden, rng)
    ptr_att = store.register("ptr_att", glorot_uniform(rng, e, 3, (3, e)))
    ptr_module_weights = LinearParams.create(store, "ptr_module_weights", e, 3, rng)
    subj_att = store.register("subj_att", glorot_uniform(rng, c.d_obj, e, (c.d_obj, e)))
    loc_lin = LinearParams.create(store, "loc_lin", 5 * (1 + c.loc_slots), c.d_loc, rng)
    f_subj = MlpParams.create(store, "f_subj", c.d_obj + e, c.mlp_hidden, 1, rng)
    f_loc = MlpParams.create(store, "f_loc", c.d_loc + e, c.mlp_hidden, 1, rng)
    f_rel = MlpParams.create(store, "f_rel", c.d_obj + 5 + e, c.mlp_hidden, 1, rng)
    label_bilstm = BiLstmParams.create(store, "label_bilstm", c.d_word, c.d_label // 2, rng)

    return NavPointModel(
        config=config, vocab=vocab, store=store,
        word_emb=word_emb, instr_lstm=instr_lstm, w_x=w_x, w_v=w_v, w_a=w_a,
        g_lin=g_lin, ctx_lstm=ctx_lstm, pm_lin=pm_lin, action_table=action_table,
        ptr_bilstm=ptr_bilstm, ptr_att=ptr_att, ptr_module_weights=ptr_module_weights,
        subj_att=subj_att, loc_lin=loc_lin, f_subj=f_subj, f_loc=f_loc, f_rel=f_rel,
        label_bilstm=label_bilstm,
    )


def save_checkpoint(model: NavPointModel, path) -> None:
    """Weights plus the config/vocab needed to rebuild the model."""
    meta = {
        "config": {k: getattr(model.config, k) for k in model.config.__dataclass_fields__},
        "vocab": model.vocab.to_json(),
    }
    with open(str(path) + ".meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, sort_keys=True)
    model.store.save(path)


def load_checkpoint(path) -> NavPointModel:
    with open(str(path) + ".meta.json", "r", encoding="utf-8") as f:
        meta = json.load(f)
    config = ModelConfig(**meta["config"])
    vocab = Vocab.from_json(meta["vocab"])
    model = build_model(config, vocab, seed=0)
    model.store.load(path)
    return model


__all__ = [
    "ACTION_TABLE_ROWS", "NavPointModel", "POINTER_MODULES", "STOP_ACTION_INDEX",
    "build_model", "load_checkpoint", "save_checkpoint",
]
