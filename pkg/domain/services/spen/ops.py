#!/usr/bin/env python3
"""
⚙️ SPEN OPS
==========
Numeric building blocks with hand-written derivatives: GELU, layer norm,
top-k selection with a straight-through backward, the switch-style
load-balance loss and softmax cross-entropy.

All functions act on the last axis and accept any leading shape.
"""

from typing import Tuple

import numpy as np

GELU_C = np.sqrt(2.0 / np.pi)
GELU_A = 0.044715


def gelu(u: np.ndarray) -> np.ndarray:
    """tanh approximation"""
    return 0.5 * u * (1.0 + np.tanh(GELU_C * (u + GELU_A * u ** 3)))


def gelu_grad(u: np.ndarray) -> np.ndarray:
    t = np.tanh(GELU_C * (u + GELU_A * u ** 3))
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)


def layer_norm(c: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float) -> Tuple[np.ndarray, dict]:
    mu = c.mean(axis=-1, keepdims=True)
    var = c.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    c_hat = (c - mu) * inv_std
    return c_hat * gain + bias, {"c_hat": c_hat, "inv_std": inv_std}


def layer_norm_backward(d_out: np.ndarray, gain: np.ndarray, cache: dict) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (d_c, d_gain, d_bias); parameter grads are summed over leading axes"""
    c_hat, inv_std = cache["c_hat"], cache["inv_std"]
    lead = tuple(range(d_out.ndim - 1))
    d_gain = (d_out * c_hat).sum(axis=lead)
    d_bias = d_out.sum(axis=lead)
    d_hat = d_out * gain
    d_c = inv_std * (
        d_hat
        - d_hat.mean(axis=-1, keepdims=True)
        - c_hat * (d_hat * c_hat).mean(axis=-1, keepdims=True)
    )
    return d_c, d_gain, d_bias


def topk_mask(z: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Keep the k largest entries of each row (ties to the lowest index).
    Backward is the straight-through identity: see `topk_backward`.
    """
    d = z.shape[-1]
    if not 1 <= k <= d:
        raise ValueError(f"k={k} must lie in [1, {d}]")
    if k == d:
        return z.copy(), np.ones(z.shape, dtype=bool)
    order = np.argsort(-z, axis=-1, kind="stable")[..., :k]
    mask = np.zeros(z.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=-1)
    return np.where(mask, z, 0.0).astype(z.dtype, copy=False), mask


def topk_backward(d_sparse: np.ndarray, mask: np.ndarray, ste_mode: str = "identity") -> np.ndarray:
    """identity: pass everything through; masked: only the selected units"""
    if ste_mode == "identity":
        return d_sparse
    if ste_mode == "masked":
        return d_sparse * mask
    raise ValueError(f"unknown ste_mode {ste_mode!r}")


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def load_balance_loss(pre_acts: np.ndarray, masks: np.ndarray) -> Tuple[float, dict]:
    """
    L = d_ff * sum_i f_i p_i with f_i the share of selections landing on unit i
    (count_i / (k N)) and p_i the mean softmax of the pre-activations. Uniform
    selection and uniform softmax give exactly 1.
    """
    pre = pre_acts.reshape(-1, pre_acts.shape[-1])
    sel = masks.reshape(-1, masks.shape[-1])
    n, d_ff = pre.shape
    if n == 0:
        raise ValueError("load-balance loss needs at least one token")
    selections = sel.sum()
    if selections == 0:
        raise ValueError("masks select no units")
    f = sel.sum(axis=0) / selections
    q = softmax(pre)
    p = q.mean(axis=0)
    return float(d_ff * np.dot(f, p)), {"f": f, "q": q, "shape": pre_acts.shape}


def load_balance_backward(cache: dict) -> np.ndarray:
    """dL/d pre_acts with the selection frequencies held constant"""
    f, q = cache["f"], cache["q"]
    n, d_ff = q.shape
    d_pre = (d_ff / n) * q * (f[None, :] - (q * f[None, :]).sum(axis=1, keepdims=True))
    return d_pre.reshape(cache["shape"])


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean CE over all positions; returns (loss, per-token CE, d_logits)"""
    flat = logits.reshape(-1, logits.shape[-1])
    tgt = np.asarray(targets).reshape(-1)
    shifted = flat - flat.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1))
    per_token = log_z - shifted[np.arange(tgt.size), tgt]
    probs = np.exp(shifted - log_z[:, None])
    probs[np.arange(tgt.size), tgt] -= 1.0
    d_logits = (probs / tgt.size).reshape(logits.shape)
    return float(per_token.mean()), per_token.reshape(np.shape(targets)), d_logits
