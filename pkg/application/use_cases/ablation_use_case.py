#!/usr/bin/env python3
"""
⚖️ ABLATION USE CASE
===================
Runs the predictor ablation and writes the per-seed table and the summary.

Domain-Driven Design: Application layer use case wrapping the ablation runner.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from domain.entities.ablation_report import AblationTable
from domain.entities.predictor import PredictorKind
from domain.entities.spen_model import SpenConfig, TrainingConfig
from domain.services.ablation.ablation_runner import DEFAULT_ARMS, AblationRunner, finalize
from infrastructure.repositories.file_repository import FileRepository

TABLE_COLUMNS = ["predictor", "seed", "ce", "delta", "status", "trace_hash", "init_hash", "diagnostic"]


@dataclass
class AblationConfig:
    """Configuration for the predictor ablation"""
    spen: SpenConfig
    training: TrainingConfig
    seeds: Sequence[int] = (0, 1, 2)
    arms: List[PredictorKind] = field(default_factory=lambda: list(DEFAULT_ARMS))
    parallel_arms: bool = False


class AblationUseCase:
    """
    ⚖️ Train every (arm, seed) pair and compare held-out cross-entropy
    """

    def __init__(self, file_repository: FileRepository):
        self.file_repository = file_repository
        self.logger = logging.getLogger(__name__)

    async def execute(self, config: AblationConfig, train_tokens: np.ndarray,
                      eval_tokens: np.ndarray) -> Dict[str, Any]:
        runner = AblationRunner(config.spen, config.training)
        jobs = [(arm, int(seed)) for arm in config.arms for seed in config.seeds]
        self.logger.info(f"🚀 Ablation: {len(config.arms)} arms x {len(config.seeds)} seeds")

        if config.parallel_arms:
            rows = await asyncio.gather(*[
                asyncio.to_thread(runner.run_arm, arm, seed, train_tokens, eval_tokens) for arm, seed in jobs
            ])
        else:
            rows = [runner.run_arm(arm, seed, train_tokens, eval_tokens) for arm, seed in jobs]

        table = AblationTable(rows=list(rows), config={
            "spen": config.spen.to_dict(),
            "training": config.training.to_dict(),
            "seeds": list(config.seeds),
        })
        finalize(table, self.logger)

        report = table.to_dict()
        await self.file_repository.save_csv([row.to_dict() for row in table.rows], "ablation.csv",
                                            columns=TABLE_COLUMNS)
        await self.file_repository.save_json(report, "ablation.json")
        self.logger.info("✅ Ablation table written")
        return report
