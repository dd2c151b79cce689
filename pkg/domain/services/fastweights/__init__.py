"""
⚡ FAST-WEIGHT SERVICES
======================
Inference-time Hebbian adaptation of the static predictor, streaming
evaluation and the precision uncertainty signal.
"""

from .fast_weight_adapter import FastWeightAdapter, auroc, init_fast_weights, pghu_infer_step, uncertainty
from .streaming_evaluator import StreamingEvaluator, StreamingReport, position_flatness, streaming_eval

__all__ = [
    "FastWeightAdapter",
    "StreamingEvaluator",
    "StreamingReport",
    "auroc",
    "init_fast_weights",
    "pghu_infer_step",
    "position_flatness",
    "streaming_eval",
    "uncertainty",
]
