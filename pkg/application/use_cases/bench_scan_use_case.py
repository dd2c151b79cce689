#!/usr/bin/env python3
"""
⏱️ BENCH SCAN USE CASE
=====================
Times the sequential and chunked EMA scans and appends one JSON line to
bench.jsonl.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict

from domain.services.kernels.ema_kernel import bench_scan
from infrastructure.repositories.file_repository import FileRepository


@dataclass
class BenchConfig:
    T: int = 4096
    d: int = 256
    chunk_len: int = 128
    repeats: int = 5
    lanes: int = 4
    alpha: float = 0.02
    seed: int = 0


class BenchScanUseCase:

    def __init__(self, file_repository: FileRepository):
        self.file_repository = file_repository
        self.logger = logging.getLogger(__name__)

    async def execute(self, config: BenchConfig) -> Dict[str, Any]:
        report = bench_scan(config.T, config.d, config.chunk_len, config.repeats,
                            lanes=config.lanes, alpha=config.alpha, seed=config.seed)
        record = report.to_dict()
        await self.file_repository.append_jsonl(record, "bench.jsonl")
        self.logger.info(f"📊 Chunked scan speedup x{report.speedup:.2f}, max |dev| {report.max_abs_dev:.2e}")
        return record
