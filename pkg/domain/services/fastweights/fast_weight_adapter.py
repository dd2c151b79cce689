#!/usr/bin/env python3
"""
⚡ FAST-WEIGHT ADAPTER
=====================
Precision-gated Hebbian updates of each block's static predictor during
inference. The adapter plugs into SpenInferenceSession: it supplies the
prediction from base + delta and learns from every observed block input.

Domain-Driven Design: Domain service over FastWeightState.
"""

import logging
from typing import List, Sequence

import numpy as np
from sklearn.metrics import roc_auc_score

from domain.entities.fast_weights import FastWeightConfig, FastWeightState
from domain.entities.predictor import PredictorKind
from domain.entities.spen_model import SpenModel

logger = logging.getLogger(__name__)


def init_fast_weights(w_pred: np.ndarray, eta: float = 0.0, pi_max: float = 10.0,
                      delta_only: bool = False) -> FastWeightState:
    """base = copy of w_pred (zero with delta_only), delta = 0, precision = 1"""
    d_out = w_pred.shape[0]
    dtype = w_pred.dtype
    base = np.zeros_like(w_pred) if delta_only else w_pred.copy()
    state = FastWeightState(
        base=base,
        delta=np.zeros_like(w_pred),
        precision=np.ones(d_out, dtype=dtype),
        err_var=np.zeros(d_out, dtype=dtype),
        eta=float(eta),
        pi_max=float(pi_max),
    )
    state.err_var[:] = 1.0 - state.eps
    return state


def pghu_infer_step(fw: FastWeightState, x_t: np.ndarray, h_bar: np.ndarray) -> FastWeightState:
    """
    e = pi * (x - (base + delta) h_bar)
    delta += eta * outer(pi * e, h_bar) - lambda_d * delta
    err_var, precision follow the same running-variance rule as the SPCN layer.
    """
    residual = x_t - fw.effective() @ h_bar
    error = fw.precision * residual
    fw.delta = fw.delta + fw.eta * np.outer(fw.precision * error, h_bar) - fw.lambda_decay * fw.delta
    fw.err_var = fw.rho * fw.err_var + (1.0 - fw.rho) * residual ** 2
    fw.precision = np.clip(1.0 / (fw.err_var + fw.eps), fw.pi_min, fw.pi_max).astype(fw.err_var.dtype)
    fw.steps += 1
    return fw


def uncertainty(fw: FastWeightState) -> float:
    """U = mean(1 / pi)"""
    return float(np.mean(1.0 / fw.precision))


def auroc(id_scores: Sequence[float], ood_scores: Sequence[float]) -> float:
    """P(random OOD score > random ID score), ties counted as 1/2"""
    if len(id_scores) == 0 or len(ood_scores) == 0:
        raise ValueError("AUROC needs non-empty in-distribution and out-of-distribution scores")
    labels = np.concatenate([np.zeros(len(id_scores)), np.ones(len(ood_scores))])
    scores = np.concatenate([np.asarray(id_scores, dtype=np.float64), np.asarray(ood_scores, dtype=np.float64)])
    return float(roc_auc_score(labels, scores))


class FastWeightAdapter:
    """
    ⚡ Per-block fast weights for a static-predictor model
    """

    def __init__(self, model: SpenModel, config: FastWeightConfig):
        if model.config.predictor is not PredictorKind.STATIC:
            raise ValueError("fast weights attach to the static predictor only")
        self.config = config
        self.states: List[FastWeightState] = [
            init_fast_weights(w, config.eta, config.pi_max, config.delta_only) for w in model.static_predictors()
        ]
        self.max_delta_norm = 0.0

    def predict(self, block_idx: int, h_bar: np.ndarray) -> np.ndarray:
        return self.states[block_idx].effective() @ h_bar

    def observe(self, block_idx: int, x_t: np.ndarray, h_bar: np.ndarray) -> None:
        state = pghu_infer_step(self.states[block_idx], x_t, h_bar)
        self.max_delta_norm = max(self.max_delta_norm, state.delta_norm())

    def uncertainty(self) -> float:
        """Mean of 1/pi over every block and dimension"""
        return float(np.mean(np.concatenate([1.0 / s.precision for s in self.states])))
