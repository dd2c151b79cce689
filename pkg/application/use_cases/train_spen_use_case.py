#!/usr/bin/env python3
"""
🏋️ TRAIN SPEN USE CASE
=====================
Trains a micro SPEN on a character corpus and writes the loss curve, the
checkpoint and a summary with the unigram baseline and the train/inference
equivalence check.

Domain-Driven Design: Application layer use case wrapping spen training.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from domain.entities.spen_model import SpenConfig, SpenModel, TrainingConfig
from domain.exceptions import InvariantViolation
from domain.services.spen.inference import check_train_inference_equivalence
from domain.services.spen.synthetic_corpus import unigram_entropy
from domain.services.spen.trainer import MicroTrainer, TrainingResult, held_out_ce
from infrastructure.repositories.checkpoint_repository import save_spen
from infrastructure.repositories.file_repository import FileRepository

CURVE_COLUMNS = ["step", "ce", "lb", "lr", "grad_norm"]
EQUIVALENCE_TOLERANCE = {"float32": 1e-4, "float64": 1e-9}


@dataclass
class TrainSpenConfig:
    """Configuration for one micro training run"""
    spen: SpenConfig
    training: TrainingConfig
    check_equivalence: bool = True
    equivalence_tokens: int = 256


class TrainSpenUseCase:
    """
    🏋️ Train, evaluate and persist a micro SPEN
    """

    def __init__(self, file_repository: FileRepository):
        self.file_repository = file_repository
        self.logger = logging.getLogger(__name__)

    def train(self, config: TrainSpenConfig, train_tokens: np.ndarray) -> TrainingResult:
        return MicroTrainer(config.spen, config.training).train(train_tokens)

    async def execute(self, config: TrainSpenConfig, train_tokens: np.ndarray,
                      eval_tokens: np.ndarray) -> Dict[str, Any]:
        result = self.train(config, train_tokens)
        summary = await self.persist(config, result, train_tokens, eval_tokens)
        return summary

    async def persist(self, config: TrainSpenConfig, result: TrainingResult,
                      train_tokens: np.ndarray, eval_tokens: np.ndarray) -> Dict[str, Any]:
        model: SpenModel = result.model
        await self.file_repository.save_csv(result.curve, "loss_curve.csv", columns=CURVE_COLUMNS)
        checkpoint = save_spen(model, self.file_repository.path_for("spen.ckpt", "checkpoints"))

        summary: Dict[str, Any] = {
            "spen": config.spen.to_dict(),
            "training": config.training.to_dict(),
            "n_parameters": model.n_parameters(),
            "final_train_ce": result.final_ce,
            "held_out_ce": held_out_ce(model, eval_tokens),
            "unigram_entropy": unigram_entropy(train_tokens),
            "uniform_ce": math.log(config.spen.vocab_size),
            "checkpoint": str(checkpoint),
        }
        summary["beats_unigram"] = summary["held_out_ce"] < summary["unigram_entropy"]

        if config.check_equivalence:
            n = min(config.equivalence_tokens, eval_tokens.size, config.spen.seq_len)
            diff = check_train_inference_equivalence(model, eval_tokens[:n])
            summary["train_inference_max_abs_diff"] = diff
            tolerance: Optional[float] = EQUIVALENCE_TOLERANCE.get(config.training.dtype)
            if tolerance is not None and diff > tolerance:
                raise InvariantViolation(f"train/inference logits differ by {diff:.3e} > {tolerance:g}")

        await self.file_repository.save_json(summary, "summary.json")
        self.logger.info(f"✅ Held-out ce {summary['held_out_ce']:.4f} "
                         f"(unigram {summary['unigram_entropy']:.4f})")
        return summary
