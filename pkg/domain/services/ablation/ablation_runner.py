#!/usr/bin/env python3
"""
⚖️ PREDICTOR ABLATION
====================
Trains one micro SPEN per (predictor, seed) with everything else held equal and
compares held-out cross-entropy. Only the producer of x_hat changes between
arms; the mixing equation and the trace banks are identical.

Domain-Driven Design: Domain service composing spen training into an
experiment.
"""

import hashlib
import logging
from dataclasses import replace
from typing import Iterable, Optional, Sequence

import numpy as np

from domain.entities.ablation_report import AblationRow, AblationTable
from domain.entities.predictor import PredictorKind
from domain.entities.spen_model import SpenConfig, SpenModel, TrainingConfig
from domain.exceptions import DivergenceError
from domain.services.spen.model import forward_pass, init_model
from domain.services.spen.trainer import MicroTrainer, held_out_ce

DEFAULT_ARMS = (PredictorKind.STATIC, PredictorKind.LINEAR_ATTENTION, PredictorKind.SOFTMAX_ATTENTION)
PROBE_LEN = 64


def trace_hash(model: SpenModel, probe_ids: np.ndarray) -> str:
    """sha256 of block 0's slow-trace sequence on a fixed probe batch"""
    _, fc = forward_pass(model, probe_ids, train=False)
    slow = np.ascontiguousarray(fc["blocks"][0]["traces"][2], dtype="<f8")
    return hashlib.sha256(slow.tobytes()).hexdigest()


def init_hash(model: SpenModel) -> str:
    """sha256 of every parameter outside the predictor head"""
    digest = hashlib.sha256()
    for name, value in sorted(model.named_parameters().items()):
        if name.endswith(".w_pred") or ".predictor." in name:
            continue
        digest.update(name.encode("utf-8"))
        digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return digest.hexdigest()


class AblationRunner:
    """
    ⚖️ Runs the predictor arms over a shared corpus
    """

    def __init__(self, spen_config: SpenConfig, training: TrainingConfig, n_eval_windows: int = 8):
        self.spen_config = spen_config
        self.training = training
        self.n_eval_windows = n_eval_windows
        self.logger = logging.getLogger(__name__)

    def run_arm(self, predictor: PredictorKind, seed: int,
                train_tokens: np.ndarray, eval_tokens: np.ndarray) -> AblationRow:
        config = replace(self.spen_config, predictor=predictor)
        training = replace(self.training, seed=seed)
        model = init_model(config, seed=seed, dtype=np.dtype(training.dtype))
        probe = np.asarray(eval_tokens[:min(PROBE_LEN, len(eval_tokens))], dtype=np.int64)
        fingerprint = trace_hash(model, probe)
        shared = init_hash(model)
        self.logger.info(f"🚀 Ablation arm {predictor.value} seed {seed}")
        try:
            result = MicroTrainer(config, training).train(train_tokens, model=model)
            ce = held_out_ce(result.model, eval_tokens, self.n_eval_windows)
        except DivergenceError as e:
            self.logger.error(f"❌ Arm {predictor.value} seed {seed} aborted: {e.diagnostic()}")
            return AblationRow(predictor=predictor, seed=seed, ce=float("nan"), trace_hash=fingerprint,
                               init_hash=shared, status="diverged", diagnostic=e.diagnostic())
        self.logger.info(f"📊 Arm {predictor.value} seed {seed}: held-out ce {ce:.4f}")
        return AblationRow(predictor=predictor, seed=seed, ce=ce, trace_hash=fingerprint, init_hash=shared)

    def run(self, train_tokens: np.ndarray, eval_tokens: np.ndarray,
            seeds: Sequence[int] = (0, 1, 2),
            arms: Iterable[PredictorKind] = DEFAULT_ARMS) -> AblationTable:
        table = AblationTable(config={
            "spen": self.spen_config.to_dict(),
            "training": self.training.to_dict(),
            "seeds": list(seeds),
        })
        for arm in arms:
            for seed in seeds:
                table.rows.append(self.run_arm(PredictorKind(arm), int(seed), train_tokens, eval_tokens))
        return finalize(table, self.logger)


def finalize(table: AblationTable, logger: Optional[logging.Logger] = None) -> AblationTable:
    """Fill deltas against the softmax arm and log the summary"""
    logger = logger or logging.getLogger(__name__)
    table.fill_deltas()
    for summary in table.summary():
        delta = f"{summary.mean_delta:+.4f}" if summary.mean_delta is not None else "n/a"
        logger.info(f"📊 {summary.predictor.value}: ce {summary.mean_ce:.4f} "
                    f"± {summary.spread:.4f} (Δ vs softmax {delta})")
    if not table.traces_identical():
        logger.warning("⚠️ Arms saw different trace sequences for the same seed")
    if not table.init_identical():
        logger.warning("⚠️ Arms started from different shared weights for the same seed")
    return table


def run_ablation(spen_config: SpenConfig,
                 training: TrainingConfig,
                 train_tokens: np.ndarray,
                 eval_tokens: np.ndarray,
                 seeds: Sequence[int] = (0, 1, 2),
                 arms: Iterable[PredictorKind] = DEFAULT_ARMS) -> AblationTable:
    return AblationRunner(spen_config, training).run(train_tokens, eval_tokens, seeds, arms)
