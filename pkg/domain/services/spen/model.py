#!/usr/bin/env python3
"""
🧮 SPEN MODEL
============
Forward and hand-derived backward pass of the micro SPEN language model.

Per block and token:
  1. h_f, h_m, h_s <- EMA traces of the block input x
  2. h_bar = h_s / ||h_s||            (0 when the norm is below 1e-8)
  3. x_hat = predictor(h_bar)
  4. e = x - x_hat
  5. c = x + W_f h_f + W_m h_m + W_s h_s + W_e e
  6. z = topk(GELU(W_up LN(c)))
  7. x' = x + W_down z

Training mode computes the traces of a whole sequence with the chunked scan;
`block_forward` is the single-token step used at inference.

Domain-Driven Design: Domain service over the SpenModel aggregate.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from domain.entities.scan import ScanConfig, ScanPrecision
from domain.entities.spen_model import BlockParams, SpenConfig, SpenModel
from domain.services.spen.predictors import (
    PredictorHead,
    StaticState,
    normalize_backward,
    normalize_trace,
    sum_outer,
)
from domain.services.kernels.ema_kernel import ema_chunked, ema_reverse
from domain.services.spen.ops import (
    cross_entropy,
    gelu,
    gelu_grad,
    layer_norm,
    layer_norm_backward,
    load_balance_backward,
    load_balance_loss,
    topk_backward,
    topk_mask,
)

logger = logging.getLogger(__name__)

Grads = Dict[str, np.ndarray]


def init_model(config: SpenConfig, seed: int = 0, dtype=np.float32) -> SpenModel:
    """
    Gaussian(0, init_std) matrices, zero W_down, unit LN gain, zero LN bias.

    Predictor parameters come from their own child stream, so two configs that
    differ only in the predictor get identical embedding and block weights.
    """
    shared, predictor_seed = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(2)
    rng = np.random.default_rng(shared)
    predictor_rng = np.random.default_rng(predictor_seed)
    d, d_ff, std = config.d_model, config.d_ff, config.init_std
    head = PredictorHead(config)

    def normal(*shape: int) -> np.ndarray:
        return (rng.standard_normal(shape) * std).astype(dtype)

    embedding = normal(config.vocab_size, d)
    blocks: List[BlockParams] = []
    for _ in range(config.n_blocks):
        w_pred, predictor, buffers = head.init_params(predictor_rng, dtype)
        blocks.append(BlockParams(
            w_f=normal(d, d),
            w_m=normal(d, d),
            w_s=normal(d, d),
            w_e=normal(d, d),
            w_up=normal(d_ff, d),
            w_down=np.zeros((d, d_ff), dtype=dtype),
            ln_gain=np.ones(d, dtype=dtype),
            ln_bias=np.zeros(d, dtype=dtype),
            w_pred=w_pred,
            predictor=predictor,
            buffers=buffers,
        ))
    return SpenModel(config=config, embedding=embedding, blocks=blocks)


# ---------------------------------------------------------------------------
# Single-token step
# ---------------------------------------------------------------------------

@dataclass
class BlockStep:
    x_out: np.ndarray
    traces: List[np.ndarray]
    cache: Dict[str, np.ndarray] = field(default_factory=dict)


def block_forward(block: BlockParams,
                  config: SpenConfig,
                  x_t: np.ndarray,
                  traces_in: List[np.ndarray],
                  predictor_state=None,
                  predict_override: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> BlockStep:
    """One token through one block; `traces_in` are (h_f, h_m, h_s) before this token"""
    if not np.all(np.isfinite(x_t)):
        raise ValueError("block input contains non-finite values")
    if config.zero_traces:
        traces = [np.zeros_like(x_t) for _ in config.decays]
    else:
        traces = [(1.0 - a) * h + a * x_t for a, h in zip(config.decays, traces_in)]
    h_f, h_m, h_s = traces
    h_bar, _ = normalize_trace(h_s)

    if predict_override is not None:
        x_hat = predict_override(h_bar)
    elif predictor_state is not None:
        x_hat = predictor_state.predict(h_bar)
    elif config.predictor.uses_w_pred:
        x_hat = StaticState(block, config.predictor).predict(h_bar)
    else:
        raise ValueError("attention predictors need a predictor_state")
    e = x_t - x_hat
    c = x_t + block.w_f @ h_f + block.w_m @ h_m + block.w_s @ h_s + block.w_e @ e
    ln_out, _ = layer_norm(c, block.ln_gain, block.ln_bias, config.ln_eps)
    u = block.w_up @ ln_out
    z, mask = topk_mask(gelu(u), config.k_active)
    x_out = x_t + block.w_down @ z

    if predictor_state is not None:
        predictor_state.push(h_bar, x_t)
    return BlockStep(x_out=x_out, traces=traces,
                     cache={"h_bar": h_bar, "x_hat": x_hat, "e": e, "c": c, "u": u, "z": z, "mask": mask})


# ---------------------------------------------------------------------------
# Sequence form (training mode)
# ---------------------------------------------------------------------------

def _scan_config(config: SpenConfig, dtype) -> ScanConfig:
    precision = ScanPrecision.FP64 if np.dtype(dtype) == np.float64 else ScanPrecision.FP32
    return ScanConfig(chunk_len=config.chunk_len, precision=precision)


def compute_traces(x: np.ndarray, config: SpenConfig) -> List[np.ndarray]:
    """(h_f, h_m, h_s) for a (B, T, d) input, each (B, T, d)"""
    if config.zero_traces:
        return [np.zeros_like(x) for _ in config.decays]
    scan = _scan_config(config, x.dtype)
    time_major = np.swapaxes(x, 0, 1)
    return [np.swapaxes(ema_chunked(time_major, a, None, scan), 0, 1) for a in config.decays]


def block_forward_sequence(block: BlockParams, config: SpenConfig, head: PredictorHead,
                           x: np.ndarray) -> Tuple[np.ndarray, dict]:
    traces = compute_traces(x, config)
    h_f, h_m, h_s = traces
    h_bar, norm = normalize_trace(h_s)
    x_hat, pred_cache = head.forward(block, h_bar, x)
    e = x - x_hat
    c = x + h_f @ block.w_f.T + h_m @ block.w_m.T + h_s @ block.w_s.T + e @ block.w_e.T
    ln_out, ln_cache = layer_norm(c, block.ln_gain, block.ln_bias, config.ln_eps)
    u = ln_out @ block.w_up.T
    z, mask = topk_mask(gelu(u), config.k_active)
    x_out = x + z @ block.w_down.T
    lb, lb_cache = load_balance_loss(u, mask)
    return x_out, {
        "x": x, "traces": traces, "h_bar": h_bar, "norm": norm, "pred": pred_cache,
        "e": e, "ln_out": ln_out, "ln": ln_cache, "u": u, "z": z, "mask": mask,
        "lb": lb, "lb_cache": lb_cache,
    }


def _reverse_scan(d_h: np.ndarray, alpha: float, config: SpenConfig) -> np.ndarray:
    time_major = np.swapaxes(d_h, 0, 1)
    return np.swapaxes(ema_reverse(time_major, alpha, _scan_config(config, d_h.dtype)), 0, 1)


def block_backward_sequence(block: BlockParams, config: SpenConfig, head: PredictorHead, cache: dict,
                            d_out: np.ndarray, lb_scale: float) -> Tuple[Grads, np.ndarray]:
    """Gradients of one block given dL/dx_out; `lb_scale` weights this block's load-balance term"""
    x, u, mask = cache["x"], cache["u"], cache["mask"]
    h_f, h_m, h_s = cache["traces"]
    grads: Grads = {"w_down": sum_outer(d_out, cache["z"])}
    d_x = d_out.copy()

    d_z = topk_backward(d_out @ block.w_down, mask, config.ste_mode)
    d_u = d_z * gelu_grad(u)
    if lb_scale:
        d_u = d_u + lb_scale * load_balance_backward(cache["lb_cache"])
    grads["w_up"] = sum_outer(d_u, cache["ln_out"])
    d_c, grads["ln_gain"], grads["ln_bias"] = layer_norm_backward(d_u @ block.w_up, block.ln_gain, cache["ln"])

    d_x += d_c
    grads["w_f"] = sum_outer(d_c, h_f)
    grads["w_m"] = sum_outer(d_c, h_m)
    grads["w_s"] = sum_outer(d_c, h_s)
    grads["w_e"] = sum_outer(d_c, cache["e"])
    d_traces = [d_c @ block.w_f, d_c @ block.w_m, d_c @ block.w_s]

    d_e = d_c @ block.w_e
    d_x += d_e
    pred_grads, d_hbar, d_x_pred = head.backward(block, cache["pred"], cache["h_bar"], x, -d_e)
    grads.update(pred_grads)
    d_x += d_x_pred
    d_traces[2] = d_traces[2] + normalize_backward(d_hbar, cache["h_bar"], cache["norm"])

    if not config.zero_traces:
        for alpha, d_h in zip(config.decays, d_traces):
            d_x += _reverse_scan(d_h, alpha, config)
    return grads, d_x


# ---------------------------------------------------------------------------
# Whole model
# ---------------------------------------------------------------------------

@dataclass
class LossBreakdown:
    total: float
    ce: float
    lb: float
    lb_per_block: List[float]
    per_token_ce: np.ndarray


def _as_batch(token_ids: np.ndarray) -> np.ndarray:
    ids = np.asarray(token_ids, dtype=np.int64)
    return ids[None, :] if ids.ndim == 1 else ids


def forward_pass(model: SpenModel, token_ids: np.ndarray, train: bool = True,
                 head_weight: Optional[np.ndarray] = None) -> Tuple[np.ndarray, dict]:
    """Logits (B, T, V) and the caches needed by `loss_and_grads`"""
    config = model.config
    ids = _as_batch(token_ids)
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ValueError(f"token ids must lie in [0, {config.vocab_size})")
    if train and ids.shape[1] > config.seq_len:
        raise ValueError(f"sequence length {ids.shape[1]} exceeds seq_len={config.seq_len}")

    head = PredictorHead(config)
    x = model.embedding[ids]
    caches = []
    for block in model.blocks:
        x, cache = block_forward_sequence(block, config, head, x)
        caches.append(cache)
    w_out = model.embedding if head_weight is None else head_weight
    return x @ w_out.T, {"ids": ids, "x_final": x, "blocks": caches}


def model_forward(model: SpenModel, token_ids: np.ndarray, train: bool = True) -> np.ndarray:
    """Logits for a sequence (T, V) or a batch (B, T, V)"""
    logits, _ = forward_pass(model, token_ids, train=train)
    return logits[0] if np.asarray(token_ids).ndim == 1 else logits


def loss_and_grads(model: SpenModel,
                   inputs: np.ndarray,
                   targets: np.ndarray,
                   head_weight: Optional[np.ndarray] = None,
                   ce_weight: float = 1.0) -> Tuple[LossBreakdown, Grads]:
    """
    total = ce_weight * mean CE + lb_weight * mean over blocks of the load-balance loss.

    With `head_weight` the output head is untied from the embedding and its
    gradient is returned under "head".
    """
    config = model.config
    logits, fc = forward_pass(model, inputs, train=True, head_weight=head_weight)
    ce, per_token, d_logits = cross_entropy(logits, _as_batch(targets))
    lbs = [cache["lb"] for cache in fc["blocks"]]
    lb = float(np.mean(lbs))
    total = ce_weight * ce + config.lb_weight * lb

    w_out = model.embedding if head_weight is None else head_weight
    d_logits = (ce_weight * d_logits).astype(model.dtype, copy=False)
    d_x = d_logits @ w_out
    head_grad = sum_outer(d_logits, fc["x_final"])

    head = PredictorHead(config)
    lb_scale = config.lb_weight / config.n_blocks
    grads: Grads = {}
    for b in reversed(range(config.n_blocks)):
        block_grads, d_x = block_backward_sequence(model.blocks[b], config, head, fc["blocks"][b], d_x, lb_scale)
        for name, value in block_grads.items():
            grads[f"blocks.{b}.{name}"] = value

    embed_grad = np.zeros_like(model.embedding)
    np.add.at(embed_grad, fc["ids"].reshape(-1), d_x.reshape(-1, config.d_model))
    if head_weight is None:
        grads["embedding"] = embed_grad + head_grad
    else:
        grads["embedding"] = embed_grad
        grads["head"] = head_grad

    return LossBreakdown(total=total, ce=ce, lb=lb, lb_per_block=lbs, per_token_ce=per_token), grads


def evaluate_loss(model: SpenModel, inputs: np.ndarray, targets: np.ndarray) -> LossBreakdown:
    """Loss without gradients"""
    config = model.config
    logits, fc = forward_pass(model, inputs, train=True)
    ce, per_token, _ = cross_entropy(logits, _as_batch(targets))
    lbs = [cache["lb"] for cache in fc["blocks"]]
    lb = float(np.mean(lbs))
    return LossBreakdown(total=ce + config.lb_weight * lb, ce=ce, lb=lb, lb_per_block=lbs, per_token_ce=per_token)
