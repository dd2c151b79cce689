#!/usr/bin/env python3
"""
🔁 SPEN INFERENCE
================
Token-by-token inference with persistent trace state. The session holds one
trace bank (h_f, h_m, h_s) and one predictor state per block; nothing is reset
between tokens unless `reset()` is called.

An optional adapter can replace each block's prediction and observe every block
step. The fast-weight layer plugs in through this hook.

Domain-Driven Design: Domain service over the SpenModel aggregate.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence

import numpy as np

from domain.entities.spen_model import SpenModel
from domain.services.spen.model import block_forward, model_forward
from domain.services.spen.ops import softmax
from domain.services.spen.predictors import PredictorHead

logger = logging.getLogger(__name__)


class InferenceAdapter(Protocol):
    """Hook called around every block step"""

    def predict(self, block_idx: int, h_bar: np.ndarray) -> np.ndarray:
        ...

    def observe(self, block_idx: int, x_t: np.ndarray, h_bar: np.ndarray) -> None:
        ...


class SpenInferenceSession:
    """
    🔁 Streaming SPEN inference

    Parameters are only read; several sessions may share one model.
    """

    def __init__(self, model: SpenModel, adapter: Optional[InferenceAdapter] = None):
        self.model = model
        self.adapter = adapter
        self.head = PredictorHead(model.config)
        self.reset()

    def reset(self) -> None:
        d, dtype = self.model.config.d_model, self.model.dtype
        self.traces = [[np.zeros(d, dtype=dtype) for _ in range(3)] for _ in self.model.blocks]
        self.predictor_states = [self.head.new_state(block) for block in self.model.blocks]
        self.position = 0

    def step(self, token_id: int) -> np.ndarray:
        """Logits (V,) for the token following `token_id`"""
        config = self.model.config
        if not 0 <= int(token_id) < config.vocab_size:
            raise ValueError(f"token id {token_id} outside [0, {config.vocab_size})")
        x = self.model.embedding[int(token_id)]
        for b, block in enumerate(self.model.blocks):
            override = None
            if self.adapter is not None:
                override = self._override(b)
            result = block_forward(block, config, x, self.traces[b],
                                   predictor_state=self.predictor_states[b],
                                   predict_override=override)
            if self.adapter is not None:
                self.adapter.observe(b, x, result.cache["h_bar"])
            self.traces[b] = result.traces
            x = result.x_out
        self.position += 1
        return self.model.embedding @ x

    def _override(self, block_idx: int):
        def predict(h_bar: np.ndarray) -> np.ndarray:
            return self.adapter.predict(block_idx, h_bar)
        return predict

    def run(self, token_ids: Sequence[int]) -> np.ndarray:
        """Logits (T, V) for a whole sequence, continuing from the current state"""
        return np.stack([self.step(t) for t in token_ids])

    def slow_traces(self) -> List[np.ndarray]:
        return [bank[2].copy() for bank in self.traces]


def check_train_inference_equivalence(model: SpenModel, token_ids: Sequence[int]) -> float:
    """Max abs difference between chunked-scan logits and token-by-token logits"""
    ids = np.asarray(token_ids, dtype=np.int64)
    chunked = model_forward(model, ids, train=False)
    sequential = SpenInferenceSession(model).run(ids)
    diff = float(np.max(np.abs(chunked - sequential))) if ids.size else 0.0
    logger.info(f"📊 Train/inference max |Δlogit| over {ids.size} tokens: {diff:.3e}")
    return diff


@dataclass
class StreamResult:
    """Windowed perplexity of one token stream"""
    window: int
    window_ppl: List[float]
    per_token_ce: np.ndarray
    uncertainty: List[float] = field(default_factory=list)

    @property
    def start_ppl(self) -> float:
        return self.window_ppl[0]

    @property
    def end_ppl(self) -> float:
        return self.window_ppl[-1]

    @property
    def change_pct(self) -> float:
        return 100.0 * (self.end_ppl - self.start_ppl) / self.start_ppl

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "window_ppl": list(self.window_ppl),
            "start_ppl": self.start_ppl,
            "end_ppl": self.end_ppl,
            "change_pct": self.change_pct,
        }


def perplexity_stream(model: SpenModel,
                      token_ids: Sequence[int],
                      window: int = 200,
                      adapter: Optional[InferenceAdapter] = None) -> StreamResult:
    """
    exp(mean next-token CE) over consecutive non-overlapping windows of
    `window` predictions. Traces persist over the whole stream. A trailing
    partial window is dropped.
    """
    ids = np.asarray(token_ids, dtype=np.int64)
    if window < 1:
        raise ValueError("window must be >= 1")
    if ids.size < window + 1:
        raise ValueError(f"stream of {ids.size} tokens is shorter than one window of {window} predictions")

    session = SpenInferenceSession(model, adapter)
    per_token = np.empty(ids.size - 1, dtype=np.float64)
    uncertainty: List[float] = []
    track_uncertainty = adapter is not None and hasattr(adapter, "uncertainty")
    for t in range(ids.size - 1):
        logits = session.step(int(ids[t])).astype(np.float64)
        probs = softmax(logits)
        per_token[t] = -np.log(max(float(probs[ids[t + 1]]), 1e-300))
        if not np.isfinite(per_token[t]):
            raise ValueError(f"non-finite cross-entropy at position {t}")
        if track_uncertainty:
            uncertainty.append(float(adapter.uncertainty()))

    n_windows = per_token.size // window
    window_ppl = [float(np.exp(per_token[w * window:(w + 1) * window].mean())) for w in range(n_windows)]
    logger.info(f"📊 Stream PPL: {n_windows} windows, first {window_ppl[0]:.2f}, last {window_ppl[-1]:.2f}")
    return StreamResult(window=window, window_ppl=window_ppl, per_token_ce=per_token, uncertainty=uncertainty)
