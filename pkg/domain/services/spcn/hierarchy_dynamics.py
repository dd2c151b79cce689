#!/usr/bin/env python3
"""
🧠 HIERARCHY DYNAMICS
====================
Per-token dynamics of the sparse predictive coding hierarchy:

- settling: three bottom-up sweeps of
  x_l = topk(a * W_ff x_below + b * W_fb x_above + g * W_lat x_l + c_spa)
- SPA: context from a ring of past settled L0 states, queried by the
  precision-weighted prediction error
- PGHU: precision-gated Hebbian update of the feedback matrices
- EMA traces at two timescales per level

Domain-Driven Design: Domain service operating on the Hierarchy aggregate.
"""

import hashlib
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from domain.entities.hierarchy import (
    ALPHA_FAST_PER_LEVEL,
    ColumnState,
    Hierarchy,
    HierarchyOptions,
    Level,
    LevelConfig,
    LevelWeights,
    SpaBuffer,
)
from domain.exceptions import InvariantViolation

logger = logging.getLogger(__name__)


def init_hierarchy(dims: Sequence[int],
                   seed: int,
                   input_dim: int = 147,
                   k_active: Optional[Sequence[int]] = None,
                   options: Optional[HierarchyOptions] = None,
                   **overrides) -> Hierarchy:
    """
    Random Gaussian weights with std 1/sqrt(fan_in); traces and error variance
    zero, precision one.
    """
    dims = [int(d) for d in dims]
    if len(dims) != len(ALPHA_FAST_PER_LEVEL):
        raise ValueError(f"expected {len(ALPHA_FAST_PER_LEVEL)} level widths, got {len(dims)}")
    if any(d <= 0 for d in dims):
        raise ValueError(f"level widths must be positive, got {dims}")
    ks = list(k_active) if k_active is not None else [None] * len(dims)

    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    levels: List[Level] = []
    for lvl, (dim, alpha_fast) in enumerate(zip(dims, ALPHA_FAST_PER_LEVEL)):
        config = LevelConfig.for_level(dim, alpha_fast, ks[lvl])
        fan_below = input_dim if lvl == 0 else dims[lvl - 1]
        w_ff = rng.standard_normal((dim, fan_below)) / np.sqrt(fan_below)
        w_lat = rng.standard_normal((dim, dim)) / np.sqrt(dim)
        w_fb = None
        if lvl < len(dims) - 1:
            w_fb = rng.standard_normal((dim, dims[lvl + 1])) / np.sqrt(dims[lvl + 1])
        levels.append(Level(config, ColumnState.initial(dim), LevelWeights(w_ff=w_ff, w_lat=w_lat, w_fb=w_fb)))

    return Hierarchy(levels=levels, spa=SpaBuffer(), input_dim=input_dim, seed=int(seed),
                     options=options or HierarchyOptions(), **overrides)


def topk_rectified(pre: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest positive entries (ties to the lowest index), zero the rest"""
    order = np.argsort(-pre, kind="stable")[:k]
    out = np.zeros_like(pre)
    keep = order[pre[order] > 0]
    out[keep] = pre[keep]
    return out


def validate_one_hot(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (dim,):
        raise ValueError(f"input must be a one-hot vector of length {dim}, got shape {u.shape}")
    if np.count_nonzero(u) != 1 or u.max() != 1.0:
        raise ValueError("input is not one-hot")
    return u


def spa_context(spa: SpaBuffer, query_error: np.ndarray) -> np.ndarray:
    """Mean of the stored states most cosine-similar to the query (at most top_k_retrieve)"""
    query_error = np.asarray(query_error, dtype=np.float64)
    if len(spa) == 0:
        return np.zeros_like(query_error)
    stored = np.stack(list(spa.ring))
    q_norm = np.linalg.norm(query_error)
    s_norm = np.linalg.norm(stored, axis=1)
    denom = np.where(s_norm * q_norm > 0, s_norm * q_norm, 1.0)
    similarity = (stored @ query_error) / denom
    chosen = np.argsort(-similarity, kind="stable")[:spa.top_k_retrieve]
    return stored[chosen].mean(axis=0)


def _precision_weighted_error(hierarchy: Hierarchy, lvl: int, states: List[np.ndarray]) -> np.ndarray:
    level = hierarchy.levels[lvl]
    prediction = level.weights.w_fb @ states[lvl + 1]
    return level.state.precision * (states[lvl] - prediction)


def settle(hierarchy: Hierarchy, u: np.ndarray) -> List[np.ndarray]:
    """
    Settle all levels on one input token. Feedback and lateral terms read the
    previous sweep's states; the feedforward term reads the level below as
    already updated in this sweep.
    """
    u = validate_one_hot(u, hierarchy.input_dim)
    a, b, g = hierarchy.mix
    levels = hierarchy.levels
    top = hierarchy.top

    for _ in range(hierarchy.settle_steps):
        previous = [level.state.x for level in levels]
        c_spa = None
        if hierarchy.options.use_spa and len(hierarchy.spa) > 0:
            c_spa = spa_context(hierarchy.spa, _precision_weighted_error(hierarchy, 0, previous))

        below = u
        for lvl, level in enumerate(levels):
            w = level.weights
            pre = a * (w.w_ff @ below) + g * (w.w_lat @ previous[lvl])
            if lvl < top:
                pre = pre + b * (w.w_fb @ previous[lvl + 1])
            if lvl == 0 and c_spa is not None:
                pre = pre + c_spa
            level.state.x = topk_rectified(pre, level.config.k_active)
            below = level.state.x

    for lvl, level in enumerate(levels):
        if np.count_nonzero(level.state.x) > level.config.k_active:
            raise InvariantViolation(f"level {lvl} settled with more than {level.config.k_active} active units")
    return hierarchy.states()


def pghu_update(hierarchy: Hierarchy, lvl: int) -> np.ndarray:
    """
    Precision-gated Hebbian update of W_fb at level `lvl`, then the error
    variance and precision updates. Returns the applied weight delta.
    """
    if not 0 <= lvl < hierarchy.top:
        raise ValueError(f"PGHU applies to levels 0..{hierarchy.top - 1}, got {lvl}")
    level = hierarchy.levels[lvl]
    state = level.state
    x_above = hierarchy.levels[lvl + 1].state.x
    w_fb = level.weights.w_fb

    residual = state.x - w_fb @ x_above
    error = state.precision * residual
    delta = hierarchy.eta * np.outer(state.precision * error, x_above) - hierarchy.lambda_decay * w_fb
    level.weights.w_fb = w_fb + delta

    state.err_var = hierarchy.rho * state.err_var + (1.0 - hierarchy.rho) * residual ** 2
    state.precision = np.clip(1.0 / (state.err_var + hierarchy.eps_precision), hierarchy.pi_min, hierarchy.pi_max)
    return delta


def update_traces(hierarchy: Hierarchy, lvl: int) -> None:
    level = hierarchy.levels[lvl]
    state, config = level.state, level.config
    state.trace_fast = (1.0 - config.alpha_fast) * state.trace_fast + config.alpha_fast * state.x
    state.trace_slow = (1.0 - config.alpha_slow) * state.trace_slow + config.alpha_slow * state.x


def step_token(hierarchy: Hierarchy, u: np.ndarray, train: bool) -> None:
    """settle -> PGHU (training only) -> traces -> SPA append"""
    settle(hierarchy, u)
    if train and hierarchy.options.learn:
        for lvl in range(hierarchy.top):
            pghu_update(hierarchy, lvl)
    for lvl in range(len(hierarchy.levels)):
        update_traces(hierarchy, lvl)
    if hierarchy.options.use_spa:
        hierarchy.spa.append(hierarchy.levels[0].state.x)
    hierarchy.tokens_seen += 1


def weight_fingerprint(hierarchy: Hierarchy) -> Dict[str, str]:
    """sha256 of the frozen matrices, per level"""
    prints: Dict[str, str] = {}
    for lvl, level in enumerate(hierarchy.levels):
        for name in ("w_ff", "w_lat"):
            matrix = np.ascontiguousarray(getattr(level.weights, name))
            prints[f"{name}_{lvl}"] = hashlib.sha256(matrix.tobytes()).hexdigest()
    return prints


def verify_fingerprint(hierarchy: Hierarchy, expected: Dict[str, str]) -> None:
    actual = weight_fingerprint(hierarchy)
    drifted = sorted(k for k in expected if actual.get(k) != expected[k])
    if drifted:
        raise InvariantViolation(f"frozen weights changed: {drifted}")
