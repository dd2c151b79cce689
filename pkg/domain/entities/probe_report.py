#!/usr/bin/env python3
"""
📊 PROBE ENTITIES
================
Probe datasets, fitted ridge probes and per-role reports, plus the published
reference numbers reports are compared against.

Domain-Driven Design: Core domain entities for probe evaluation results.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from domain.entities.grammar import ROLE_SET

N_ROLES = len(ROLE_SET)

# Probe accuracies reported for the trained hierarchy (within, transfer, deep).
PROBE_REFERENCE: Dict[str, Dict[str, float]] = {
    "activation": {"d": 1024, "within": 0.795, "transfer": 0.415, "deep": 0.326},
    "traces": {"d": 2048, "within": 0.947, "transfer": 0.485, "deep": 0.761},
    "combined": {"d": 3072, "within": 0.960, "transfer": 0.618, "deep": 0.840},
}

PROJECTION_REFERENCE: Dict[str, Dict[str, float]] = {
    "traces@1024": {"within": 0.939, "transfer": 0.507, "deep": 0.694},
    "traces@512": {"within": 0.910, "deep": 0.560},
    "activation@1024": {"within": 0.804, "transfer": 0.462, "deep": 0.328},
}

ABLATION_REFERENCE: Dict[str, Dict[str, float]] = {
    "fwd_combined": {"within": 0.903, "transfer": 0.586},
    "no_machinery": {"within": 0.847},
    "level_traces_1": {"within": 0.420},
    "level_traces_2": {"within": 0.276},
}

SUPERVISED_REFERENCE: Dict[str, float] = {"within": 1.000, "transfer": 0.762, "deep": 1.000}

PER_ROLE_TRANSFER_REFERENCE: Dict[str, Dict[str, float]] = {
    "det_agent": {"hebbian": 1.000, "supervised": 0.759},
    "verb_rel": {"hebbian": 0.893, "supervised": 0.079},
    "noun_agent": {"hebbian": 0.589, "supervised": 0.802},
    "noun_patient": {"hebbian": 0.334, "supervised": 0.890},
}


@dataclass
class ProbeDataset:
    """Features (row = token) with one role id per row"""
    features: np.ndarray
    labels: np.ndarray
    deep: Optional[np.ndarray] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be a matrix, got shape {self.features.shape}")
        if self.features.shape[1] == 0:
            raise ValueError("features must have at least one column")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on the number of tokens")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= N_ROLES):
            raise ValueError("labels must be role ids in [0, 20)")
        if self.deep is not None and self.deep.shape[0] != self.labels.shape[0]:
            raise ValueError("deep mask length must match labels")

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def with_features(self, features: np.ndarray) -> 'ProbeDataset':
        return ProbeDataset(features=features, labels=self.labels, deep=self.deep)


@dataclass
class RidgeProbe:
    """One-vs-all ridge weights, 20 x (d + 1) with the bias in the last column"""
    weights: np.ndarray
    lam: float = 0.01

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1] - 1)

    @property
    def n_parameters(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True)
class RoleScore:
    accuracy: float
    wilson_low: float
    wilson_high: float
    support: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")
        if not self.wilson_low <= self.accuracy + 1e-12 or not self.accuracy <= self.wilson_high + 1e-12:
            raise ValueError("Wilson interval does not contain the accuracy")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "acc": self.accuracy,
            "low": self.wilson_low,
            "high": self.wilson_high,
            "support": self.support,
        }


@dataclass
class ProbeReport:
    """
    📊 Probe results for one representation

    `deep` is measured on the within split; `deep_transfer` on the transfer split.
    """
    representation: str
    dim: int
    per_role: Dict[str, RoleScore]
    within: float
    transfer: float
    deep: float
    per_role_transfer: Dict[str, RoleScore] = field(default_factory=dict)
    deep_transfer: float = float("nan")
    intervals: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    n_parameters: int = 0

    def __post_init__(self):
        for name in ("within", "transfer", "deep"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0) and not np.isnan(value):
                raise ValueError(f"{name} accuracy {value} outside [0, 1]")

    @property
    def fraction_of_supervised(self) -> float:
        return self.within / SUPERVISED_REFERENCE["within"]

    def role_rows(self, split: str = "within") -> List[Dict[str, Any]]:
        """CSV rows: role, acc, low, high, support"""
        table = self.per_role if split == "within" else self.per_role_transfer
        return [{"role": role, **score.to_dict()} for role, score in table.items()]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "representation": self.representation,
            "d": self.dim,
            "within": self.within,
            "transfer": self.transfer,
            "deep": self.deep,
            "deep_transfer": self.deep_transfer,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "fraction_of_supervised": self.fraction_of_supervised,
            "n_parameters": self.n_parameters,
            "per_role": {r: s.to_dict() for r, s in self.per_role.items()},
            "per_role_transfer": {r: s.to_dict() for r, s in self.per_role_transfer.items()},
        }


@dataclass
class ProjectionResult:
    """Probe accuracies of a representation projected to `d_out`, one entry per seed"""
    representation: str
    d_out: int
    within: List[float]
    transfer: List[float]
    deep: List[float]
    n_parameters: int

    @staticmethod
    def _summary(values: List[float]) -> Dict[str, float]:
        arr = np.asarray(values, dtype=np.float64)
        return {"mean": float(arr.mean()), "spread": float(arr.max() - arr.min())}

    @property
    def mean_within(self) -> float:
        return float(np.mean(self.within))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "representation": self.representation,
            "d": self.d_out,
            "seeds": len(self.within),
            "within": self._summary(self.within),
            "transfer": self._summary(self.transfer),
            "deep": self._summary(self.deep),
            "n_parameters": self.n_parameters,
        }
