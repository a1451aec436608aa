"""Co-grounding navigator: instruction encoding, text/visual attention,
context LSTM, per-candidate action logits, and the progress monitor."""

from __future__ import annotations

from dataclasses import dataclass

from ..episode import Observation
from ..nn import autodiff as ad
from ..nn import linear, lstm_step, positional_encoding
from ..nn.autodiff import Var
from ..world import Environment
from .fusion import fuse_view
from .network import NavPointModel, STOP_ACTION_INDEX
from .pointer import PointerQuery, view_contexts


def encode_instruction(tokens, model: NavPointModel) -> tuple[Var, Var, Var]:
    """Per-token LSTM states as an (L, d_text) matrix plus the final (h, c)."""
    ids = model.vocab.encode(tokens)
    if not ids:
        raise ValueError("instruction must contain at least one token")
    h, c = model.instr_lstm.zero_state()
    rows = []
    for i in ids:
        h, c = lstm_step(model.instr_lstm, ad.index_row(model.word_emb, i), h, c)
        rows.append(h)
    return ad.stack_rows(rows), h, c


def g_transform(model: NavPointModel, fused: Var) -> Var:
    """Shared one-layer MLP over candidate-view features."""
    return ad.tanh(linear(model.g_lin, fused))


def co_ground(x_matrix: Var, fused_candidates: list[Var], h_prev: Var,
              model: NavPointModel) -> tuple[Var, Var, Var, Var, list[Var]]:
    """Textual and visual attention given the previous context.

    Returns (alpha, beta, grounded_text, grounded_visual, g(candidates)).
    The positional encoding enters the textual attention logits only; the
    grounded text is the attention-weighted sum of the raw token states.
    """
    length = x_matrix.value.shape[0]
    pe = ad.constant(positional_encoding(length, x_matrix.value.shape[1]))
    alpha = ad.softmax(ad.matmul(x_matrix + pe, ad.matmul(model.w_x, h_prev)))
    x_hat = ad.matmul(alpha, x_matrix)

    g_list = [g_transform(model, f) for f in fused_candidates]
    wv_h = ad.matmul(model.w_v, h_prev)
    beta = ad.softmax(ad.stack_rows([ad.matmul(g, wv_h) for g in g_list]))
    v_hat = None
    for k, f in enumerate(fused_candidates):
        term = ad.mul(ad.index_item(beta, k), f)
        v_hat = term if v_hat is None else v_hat + term
    return alpha, beta, x_hat, v_hat, g_list


def context_update(model: NavPointModel, h: Var, c: Var, x_hat: Var, v_hat: Var,
                   a_prev: Var) -> tuple[Var, Var]:
    return lstm_step(model.ctx_lstm, ad.concat([x_hat, v_hat, a_prev]), h, c)


def action_logits(model: NavPointModel, h: Var, x_hat: Var,
                  g_list: list[Var]) -> Var:
    q = ad.matmul(model.w_a, ad.concat([h, x_hat]))
    return ad.stack_rows([ad.matmul(g, q) for g in g_list])


def progress_monitor(model: NavPointModel, h: Var, x_hat: Var) -> Var:
    return ad.vsum(ad.sigmoid(linear(model.pm_lin, ad.concat([h, x_hat]))))


@dataclass(frozen=True)
class Candidate:
    """One navigation option at a step: stop (index 0) or a neighbor."""

    viewpoint_id: str | None  # None = stop
    view_k: int
    fused: Var


def build_candidates(env: Environment, obs: Observation, query: PointerQuery,
                     model: NavPointModel) -> list[Candidate]:
    """Stop candidate first, then the navigable neighbors in id order."""
    cfg = model.config

    def fused_for(view_k: int) -> Var:
        base = obs.views[view_k - 1].feature
        contexts = view_contexts(env, obs, view_k, cfg)
        return fuse_view(base, contexts, query, model)

    facing = obs.facing_view_k()
    cands = [Candidate(viewpoint_id=None, view_k=facing, fused=fused_for(facing))]
    for nav in obs.navigable:
        cands.append(Candidate(
            viewpoint_id=nav.viewpoint_id,
            view_k=nav.view_k,
            fused=fused_for(nav.view_k),
        ))
    return cands


@dataclass
class NavStep:
    """Forward pass of one decision step."""

    candidates: list[Candidate]
    alpha: Var
    beta: Var
    logits: Var
    progress: Var
    h: Var
    c: Var


def nav_step(model: NavPointModel, x_matrix: Var, candidates: list[Candidate],
             h: Var, c: Var, a_prev_index: int) -> NavStep:
    fused = [cand.fused for cand in candidates]
    a_prev = ad.index_row(model.action_table, a_prev_index)
    alpha, beta, x_hat, v_hat, g_list = co_ground(x_matrix, fused, h, model)
    h_new, c_new = context_update(model, h, c, x_hat, v_hat, a_prev)
    logits = action_logits(model, h_new, x_hat, g_list)
    progress = progress_monitor(model, h_new, x_hat)
    return NavStep(candidates=candidates, alpha=alpha, beta=beta, logits=logits,
                   progress=progress, h=h_new, c=c_new)


def action_index_for(candidates: list[Candidate], viewpoint_id: str | None) -> int:
    """Action-table row for the chosen candidate (stop row or its view k)."""
    if viewpoint_id is None:
        return STOP_ACTION_INDEX
    for cand in candidates:
        if cand.viewpoint_id == viewpoint_id:
            return cand.view_k
    raise KeyError(f"{viewpoint_id!r} is not a candidate")
