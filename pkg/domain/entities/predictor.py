#!/usr/bin/env python3
"""
🎯 PREDICTOR ENTITIES
====================
The predictor heads a SPEN block can use to form its next-input prediction.
All of them read the block's slow trace; none sees raw tokens.
"""

from enum import Enum


class PredictorKind(Enum):
    """Predictor head of a SPEN block"""
    STATIC = "static"
    LINEAR_ATTENTION = "linear_attention"
    SOFTMAX_ATTENTION = "softmax_attention"
    PROJECTED_STATIC = "projected_static"

    @property
    def uses_w_pred(self) -> bool:
        return self in (PredictorKind.STATIC, PredictorKind.PROJECTED_STATIC)

    @property
    def is_attention(self) -> bool:
        return self in (PredictorKind.LINEAR_ATTENTION, PredictorKind.SOFTMAX_ATTENTION)
