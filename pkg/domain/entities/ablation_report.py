#!/usr/bin/env python3
"""
📋 ABLATION REPORT ENTITIES
==========================
Rows and summaries of the predictor ablation: one row per (predictor, seed),
cross-entropy on a held-out slice and the delta against the softmax arm.

Domain-Driven Design: Core domain entities (report value objects).
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from domain.entities.predictor import PredictorKind

REFERENCE_DELTAS: Dict[str, float] = {
    PredictorKind.STATIC.value: 0.01,
    PredictorKind.LINEAR_ATTENTION.value: -0.03,
    PredictorKind.SOFTMAX_ATTENTION.value: 0.0,
}
BASELINE = PredictorKind.SOFTMAX_ATTENTION


@dataclass
class AblationRow:
    predictor: PredictorKind
    seed: int
    ce: float
    trace_hash: str
    init_hash: str = ""
    status: str = "ok"
    delta: Optional[float] = None
    diagnostic: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok" and math.isfinite(self.ce)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "predictor": self.predictor.value,
            "seed": self.seed,
            "ce": self.ce,
            "delta": self.delta,
            "status": self.status,
            "trace_hash": self.trace_hash,
            "init_hash": self.init_hash,
            "diagnostic": self.diagnostic,
        }


@dataclass
class ArmSummary:
    predictor: PredictorKind
    mean_ce: float
    spread: float
    mean_delta: Optional[float]
    n_seeds: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "predictor": self.predictor.value,
            "mean_ce": self.mean_ce,
            "spread": self.spread,
            "mean_delta": self.mean_delta,
            "n_seeds": self.n_seeds,
            "reference_delta": REFERENCE_DELTAS.get(self.predictor.value),
        }


@dataclass
class AblationTable:
    rows: List[AblationRow] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def arms(self) -> List[PredictorKind]:
        seen: List[PredictorKind] = []
        for row in self.rows:
            if row.predictor not in seen:
                seen.append(row.predictor)
        return seen

    def rows_for(self, predictor: PredictorKind) -> List[AblationRow]:
        return [row for row in self.rows if row.predictor is predictor]

    def fill_deltas(self) -> None:
        """delta = ce - ce of the softmax arm with the same seed"""
        baseline = {row.seed: row.ce for row in self.rows_for(BASELINE) if row.ok}
        for row in self.rows:
            row.delta = row.ce - baseline[row.seed] if row.ok and row.seed in baseline else None

    def summary(self) -> List[ArmSummary]:
        summaries = []
        for arm in self.arms():
            good = [row for row in self.rows_for(arm) if row.ok]
            if not good:
                summaries.append(ArmSummary(arm, float("nan"), float("nan"), None, 0))
                continue
            ces = [row.ce for row in good]
            deltas = [row.delta for row in good if row.delta is not None]
            summaries.append(ArmSummary(
                predictor=arm,
                mean_ce=sum(ces) / len(ces),
                spread=max(ces) - min(ces),
                mean_delta=sum(deltas) / len(deltas) if deltas else None,
                n_seeds=len(good),
            ))
        return summaries

    def traces_identical(self) -> bool:
        """Every arm saw the same trace hash for each seed"""
        by_seed: Dict[int, set] = {}
        for row in self.rows:
            by_seed.setdefault(row.seed, set()).add(row.trace_hash)
        return all(len(hashes) == 1 for hashes in by_seed.values())

    def init_identical(self) -> bool:
        """Every arm started from the same non-predictor weights for each seed"""
        by_seed: Dict[int, set] = {}
        for row in self.rows:
            by_seed.setdefault(row.seed, set()).add(row.init_hash)
        return all(len(hashes) == 1 for hashes in by_seed.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "rows": [row.to_dict() for row in self.rows],
            "summary": [s.to_dict() for s in self.summary()],
            "reference_deltas": dict(REFERENCE_DELTAS),
            "traces_identical": self.traces_identical(),
            "init_identical": self.init_identical(),
        }
