"""
📊 PROBING SERVICES
==================
Ridge probes, Wilson intervals and the random-projection control.
"""

from .probe_evaluator import (
    ProbeEvaluator,
    evaluate,
    fit_ridge,
    predict,
    projection_matrix,
    random_projection,
    wilson_ci,
)

__all__ = [
    "ProbeEvaluator",
    "evaluate",
    "fit_ridge",
    "predict",
    "projection_matrix",
    "random_projection",
    "wilson_ci",
]
