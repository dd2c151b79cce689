"""
🧠 SPCN SERVICES
===============
Four-level Hebbian hierarchy: settling, SPA, PGHU, traces, corpus passes.
"""

from .corpus_processor import CorpusProcessor, deep_mask, process_corpus, token_labels
from .hierarchy_dynamics import (
    init_hierarchy,
    pghu_update,
    settle,
    spa_context,
    step_token,
    topk_rectified,
    update_traces,
    verify_fingerprint,
    weight_fingerprint,
)

__all__ = [
    "CorpusProcessor",
    "deep_mask",
    "init_hierarchy",
    "pghu_update",
    "process_corpus",
    "settle",
    "spa_context",
    "step_token",
    "token_labels",
    "topk_rectified",
    "update_traces",
    "verify_fingerprint",
    "weight_fingerprint",
]
