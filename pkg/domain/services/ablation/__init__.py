"""
⚖️ ABLATION SERVICES
===================
Predictor ablation: the heads live with the SPEN block, the runner here
trains and compares them.
"""

from domain.services.spen.predictors import (
    LinearAttentionState,
    SoftmaxAttentionState,
    attention_weights,
    predict_linear_attn,
    predict_softmax_attn,
    predict_static,
)

from .ablation_runner import AblationRunner, finalize, init_hash, run_ablation, trace_hash

__all__ = [
    "AblationRunner",
    "LinearAttentionState",
    "SoftmaxAttentionState",
    "attention_weights",
    "finalize",
    "init_hash",
    "predict_linear_attn",
    "predict_softmax_attn",
    "predict_static",
    "run_ablation",
    "trace_hash",
]
