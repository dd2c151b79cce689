#!/usr/bin/env python3
"""
🎯 PREDICTORS
============
Predictor heads that turn a block's slow trace into the next-input prediction:

- static: x_hat = W h_bar
- projected static: x_hat = W (P h_bar) with a frozen random P of width d/4
- linear attention: x_hat_t = sum_{s<t} gamma^(t-1-s) (q_t . k_s) v_s with q, k
  from the normalized slow trace and v from the block input
- softmax attention: causal multi-head attention with queries from the
  normalized slow trace, keys from the past (slow trace, block input) pairs and
  values from the past slow traces

Sequence forms (leading axes (B, T)) serve training and have hand-written
backward passes; step states serve token-by-token inference.

Domain-Driven Design: Domain service used by every SPEN block; the
predictor ablation swaps between these heads.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from domain.entities.predictor import PredictorKind
from domain.entities.spen_model import BlockParams, SpenConfig
from domain.services.spen.ops import softmax

NORM_GUARD = 1e-8

Grads = Dict[str, np.ndarray]


def normalize_trace(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """h / ||h|| along the last axis; zero where the norm is below 1e-8"""
    norm = np.linalg.norm(h, axis=-1, keepdims=True)
    safe = np.where(norm < NORM_GUARD, 1.0, norm)
    h_bar = np.where(norm < NORM_GUARD, 0.0, h / safe)
    return h_bar.astype(h.dtype, copy=False), norm


def normalize_backward(d_hbar: np.ndarray, h_bar: np.ndarray, norm: np.ndarray) -> np.ndarray:
    safe = np.where(norm < NORM_GUARD, 1.0, norm)
    d_h = (d_hbar - h_bar * (h_bar * d_hbar).sum(axis=-1, keepdims=True)) / safe
    return np.where(norm < NORM_GUARD, 0.0, d_h)


def predict_static(w: np.ndarray, h_slow: np.ndarray) -> np.ndarray:
    """x_hat = w (h_slow / ||h_slow||)"""
    h_bar, _ = normalize_trace(np.asarray(h_slow))
    return h_bar @ w.T


def causal_decay(T: int, gamma: float, dtype=np.float64) -> np.ndarray:
    """G[t, s] = gamma^(t-1-s) for s < t, else 0"""
    t = np.arange(T)[:, None]
    s = np.arange(T)[None, :]
    lag = np.maximum(t - 1 - s, 0)
    return np.where(s < t, np.power(gamma, lag), 0.0).astype(dtype)


def predict_linear_attn(params: Dict[str, np.ndarray],
                        h_bar_t: np.ndarray,
                        history: Sequence[Tuple[np.ndarray, np.ndarray]],
                        gamma: float = 0.999) -> np.ndarray:
    """Explicit causal sum over the (h_bar_s, x_s) history"""
    q = params["w_q"] @ h_bar_t
    out = np.zeros(params["w_v"].shape[0], dtype=h_bar_t.dtype)
    t = len(history)
    for s, (h_bar_s, x_s) in enumerate(history):
        k = params["w_k"] @ h_bar_s
        v = params["w_v"] @ x_s
        out = out + gamma ** (t - 1 - s) * float(q @ k) * v
    return out


def key_input(h_bar: np.ndarray, x: np.ndarray) -> np.ndarray:
    """[h_bar ; x] along the last axis"""
    return np.concatenate([h_bar, np.asarray(x, dtype=h_bar.dtype)], axis=-1)


def attention_weights(params: Dict[str, np.ndarray], h_bar_t: np.ndarray,
                      history: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """(H, len(history)) softmax weights of the current query over past keys"""
    w_q, w_k = params["w_q"], params["w_k"]
    d_head = w_q.shape[1]
    q = np.einsum("hed,d->he", w_q, h_bar_t)
    keys = np.stack([np.einsum("hed,d->he", w_k, key_input(h, x)) for h, x in history], axis=1)
    scores = np.einsum("he,hse->hs", q, keys) / math.sqrt(d_head)
    return softmax(scores)


def predict_softmax_attn(params: Dict[str, np.ndarray],
                         h_bar_t: np.ndarray,
                         history: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Causal multi-head softmax attention over the (h_bar_s, x_s) history"""
    if len(history) == 0:
        return np.zeros(params["w_o"].shape[0], dtype=h_bar_t.dtype)
    weights = attention_weights(params, h_bar_t, history)
    values = np.stack([np.einsum("hed,d->he", params["w_v"], h) for h, _ in history], axis=1)
    heads = np.einsum("hs,hse->he", weights, values)
    return params["w_o"] @ heads.reshape(-1)


class LinearAttentionState:
    """Running outer-product state: M_t = gamma M_{t-1} + v_{t-1} k_{t-1}^T"""

    def __init__(self, params: Dict[str, np.ndarray], gamma: float):
        self.params = params
        self.gamma = gamma
        d = params["w_v"].shape[0]
        self.memory = np.zeros((d, params["w_k"].shape[0]), dtype=params["w_v"].dtype)

    def predict(self, h_bar: np.ndarray) -> np.ndarray:
        return self.memory @ (self.params["w_q"] @ h_bar)

    def push(self, h_bar: np.ndarray, x: np.ndarray) -> None:
        k = self.params["w_k"] @ h_bar
        v = self.params["w_v"] @ x
        self.memory = self.gamma * self.memory + np.outer(v, k)


class SoftmaxAttentionState:
    """Key/value cache of past (slow trace, input) keys and slow-trace values"""

    def __init__(self, params: Dict[str, np.ndarray]):
        self.params = params
        self.keys: List[np.ndarray] = []
        self.values: List[np.ndarray] = []

    def predict(self, h_bar: np.ndarray) -> np.ndarray:
        w_q, w_o = self.params["w_q"], self.params["w_o"]
        if not self.keys:
            return np.zeros(w_o.shape[0], dtype=w_o.dtype)
        q = np.einsum("hed,d->he", w_q, h_bar)
        keys = np.stack(self.keys, axis=1)
        values = np.stack(self.values, axis=1)
        weights = softmax(np.einsum("he,hse->hs", q, keys) / math.sqrt(w_q.shape[1]))
        return w_o @ np.einsum("hs,hse->he", weights, values).reshape(-1)

    def push(self, h_bar: np.ndarray, x: np.ndarray) -> None:
        self.keys.append(np.einsum("hed,d->he", self.params["w_k"], key_input(h_bar, x)))
        self.values.append(np.einsum("hed,d->he", self.params["w_v"], h_bar))


class StaticState:
    """Stateless step form of the static and projected-static heads"""

    def __init__(self, block: BlockParams, kind: PredictorKind):
        self.block = block
        self.kind = kind

    def predict(self, h_bar: np.ndarray) -> np.ndarray:
        if self.kind is PredictorKind.PROJECTED_STATIC:
            return self.block.w_pred @ (self.block.buffers["proj"] @ h_bar)
        return self.block.w_pred @ h_bar

    def push(self, h_bar: np.ndarray, x: np.ndarray) -> None:
        return None


class PredictorHead:
    """
    🎯 Dispatch from a config's predictor kind to its sequence and step forms
    """

    def __init__(self, config: SpenConfig):
        self.config = config
        self.kind = config.predictor

    # ---- initialisation -------------------------------------------------
    def init_params(self, rng: np.random.Generator, dtype) -> Tuple[Optional[np.ndarray], Grads, Grads]:
        """Returns (w_pred, predictor params, buffers)"""
        d, std = self.config.d_model, self.config.init_std

        def normal(*shape: int) -> np.ndarray:
            return (rng.standard_normal(shape) * std).astype(dtype)

        if self.kind is PredictorKind.STATIC:
            return normal(d, d), {}, {}
        if self.kind is PredictorKind.PROJECTED_STATIC:
            r = self.config.projection_width
            proj = (rng.standard_normal((r, d)) / math.sqrt(d)).astype(dtype)
            return normal(d, r), {}, {"proj": proj}
        if self.kind is PredictorKind.LINEAR_ATTENTION:
            return None, {"w_q": normal(d, d), "w_k": normal(d, d), "w_v": normal(d, d)}, {}
        h, e = self.config.n_heads, self.config.d_head
        return None, {
            "w_q": normal(h, e, d), "w_k": normal(h, e, 2 * d), "w_v": normal(h, e, d), "w_o": normal(d, h * e),
        }, {}

    def new_state(self, block: BlockParams):
        if self.kind is PredictorKind.LINEAR_ATTENTION:
            return LinearAttentionState(block.predictor, self.config.linear_gamma)
        if self.kind is PredictorKind.SOFTMAX_ATTENTION:
            return SoftmaxAttentionState(block.predictor)
        return StaticState(block, self.kind)

    # ---- sequence forms ---------------------------------------------------
    def forward(self, block: BlockParams, h_bar: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, dict]:
        if self.kind is PredictorKind.STATIC:
            return h_bar @ block.w_pred.T, {}
        if self.kind is PredictorKind.PROJECTED_STATIC:
            low = h_bar @ block.buffers["proj"].T
            return low @ block.w_pred.T, {"low": low}
        if self.kind is PredictorKind.LINEAR_ATTENTION:
            return self._linear_forward(block.predictor, h_bar, x)
        return self._softmax_forward(block.predictor, h_bar, x)

    def backward(self, block: BlockParams, cache: dict, h_bar: np.ndarray, x: np.ndarray,
                 d_xhat: np.ndarray) -> Tuple[Grads, np.ndarray, np.ndarray]:
        """Returns (grads keyed like BlockParams.named_parameters, d_hbar, d_x)"""
        d_x = np.zeros_like(x)
        if self.kind is PredictorKind.STATIC:
            grads = {"w_pred": sum_outer(d_xhat, h_bar)}
            return grads, d_xhat @ block.w_pred, d_x
        if self.kind is PredictorKind.PROJECTED_STATIC:
            grads = {"w_pred": sum_outer(d_xhat, cache["low"])}
            return grads, (d_xhat @ block.w_pred) @ block.buffers["proj"], d_x
        if self.kind is PredictorKind.LINEAR_ATTENTION:
            return self._linear_backward(block.predictor, cache, h_bar, x, d_xhat)
        return self._softmax_backward(block.predictor, cache, h_bar, d_xhat)

    def _linear_forward(self, p: Grads, h_bar: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, dict]:
        T = h_bar.shape[-2]
        decay = causal_decay(T, self.config.linear_gamma, h_bar.dtype)
        q = h_bar @ p["w_q"].T
        k = h_bar @ p["w_k"].T
        v = x @ p["w_v"].T
        scores = q @ np.swapaxes(k, -1, -2)
        attn = scores * decay
        return attn @ v, {"q": q, "k": k, "v": v, "attn": attn, "decay": decay}

    def _linear_backward(self, p: Grads, cache: dict, h_bar: np.ndarray, x: np.ndarray,
                         d_xhat: np.ndarray) -> Tuple[Grads, np.ndarray, np.ndarray]:
        q, k, v, attn, decay = cache["q"], cache["k"], cache["v"], cache["attn"], cache["decay"]
        d_attn = d_xhat @ np.swapaxes(v, -1, -2)
        d_v = np.swapaxes(attn, -1, -2) @ d_xhat
        d_scores = d_attn * decay
        d_q = d_scores @ k
        d_k = np.swapaxes(d_scores, -1, -2) @ q
        grads = {
            "predictor.w_q": sum_outer(d_q, h_bar),
            "predictor.w_k": sum_outer(d_k, h_bar),
            "predictor.w_v": sum_outer(d_v, x),
        }
        d_hbar = d_q @ p["w_q"] + d_k @ p["w_k"]
        return grads, d_hbar, d_v @ p["w_v"]

    def _softmax_forward(self, p: Grads, h_bar: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, dict]:
        T = h_bar.shape[-2]
        scale = 1.0 / math.sqrt(self.config.d_head)
        m = key_input(h_bar, x)
        q = np.einsum("btd,hed->bhte", h_bar, p["w_q"])
        k = np.einsum("btd,hed->bhte", m, p["w_k"])
        v = np.einsum("btd,hed->bhte", h_bar, p["w_v"])
        mask = np.tril(np.ones((T, T), dtype=bool), k=-1)
        scores = np.where(mask, np.einsum("bhte,bhse->bhts", q, k) * scale, -np.inf)
        row_max = np.max(np.where(mask, scores, -np.inf), axis=-1, keepdims=True)
        row_max = np.where(np.isfinite(row_max), row_max, 0.0)
        e = np.where(mask, np.exp(np.where(mask, scores - row_max, 0.0)), 0.0)
        denom = e.sum(axis=-1, keepdims=True)
        attn = (e / np.where(denom > 0, denom, 1.0)).astype(h_bar.dtype, copy=False)
        heads = np.einsum("bhts,bhse->bhte", attn, v)
        B, H, _, E = heads.shape
        concat = np.transpose(heads, (0, 2, 1, 3)).reshape(B, T, H * E)
        return concat @ p["w_o"].T, {"q": q, "k": k, "v": v, "m": m, "attn": attn, "concat": concat,
                                      "scale": scale}

    def _softmax_backward(self, p: Grads, cache: dict, h_bar: np.ndarray,
                          d_xhat: np.ndarray) -> Tuple[Grads, np.ndarray, np.ndarray]:
        q, k, v, attn, concat, scale = (cache[n] for n in ("q", "k", "v", "attn", "concat", "scale"))
        B, H, T, E = q.shape
        d_concat = d_xhat @ p["w_o"]
        d_heads = np.transpose(d_concat.reshape(B, T, H, E), (0, 2, 1, 3))
        d_attn = np.einsum("bhte,bhse->bhts", d_heads, v)
        d_v = np.einsum("bhts,bhte->bhse", attn, d_heads)
        d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True)) * scale
        d_q = np.einsum("bhts,bhse->bhte", d_scores, k)
        d_k = np.einsum("bhts,bhte->bhse", d_scores, q)
        grads = {
            "predictor.w_o": sum_outer(d_xhat, concat),
            "predictor.w_q": np.einsum("bhte,btd->hed", d_q, h_bar),
            "predictor.w_k": np.einsum("bhte,btd->hed", d_k, cache["m"]),
            "predictor.w_v": np.einsum("bhte,btd->hed", d_v, h_bar),
        }
        d_m = np.einsum("bhte,hed->btd", d_k, p["w_k"])
        d = h_bar.shape[-1]
        d_hbar = (np.einsum("bhte,hed->btd", d_q, p["w_q"])
                  + d_m[..., :d]
                  + np.einsum("bhte,hed->btd", d_v, p["w_v"]))
        return grads, d_hbar, d_m[..., d:]


def sum_outer(d_out: np.ndarray, inp: np.ndarray) -> np.ndarray:
    """sum over leading axes of d_out[..., i] * inp[..., j]"""
    return d_out.reshape(-1, d_out.shape[-1]).T @ inp.reshape(-1, inp.shape[-1])
