#!/usr/bin/env python3
"""
🔁 SCAN ENTITIES
===============
Decay specifications and chunked-scan parameters for the EMA recurrence
h_t = (1 - alpha) * h_{t-1} + alpha * x_t, shared by the Hebbian hierarchy and
the SPEN language model.

Domain-Driven Design: Value objects with validation.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np


class ScanPrecision(Enum):
    """Floating point width used by a scan"""
    FP32 = "fp32"
    FP64 = "fp64"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self is ScanPrecision.FP32 else np.float64)


class CombineMode(Enum):
    """How chunk carries are combined across chunks"""
    SEQUENTIAL = "sequential"
    TREE = "tree"


def validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0) or math.isnan(alpha):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


@dataclass(frozen=True)
class DecaySpec:
    """One EMA decay rate and its derived time constants"""
    alpha: float

    def __post_init__(self):
        validate_alpha(self.alpha)

    @property
    def half_life(self) -> float:
        """Lag at which the retained state halves; 0 when alpha = 1"""
        if self.alpha >= 1.0:
            return 0.0
        return math.log(2.0) / (-math.log1p(-self.alpha))

    @property
    def window(self) -> float:
        """Effective integration window 1/alpha"""
        return 1.0 / self.alpha

    def retention(self, lag: int) -> float:
        """Fraction of the state surviving `lag` updates"""
        return (1.0 - self.alpha) ** lag

    def token_weight(self, lag: int) -> float:
        """Coefficient of the input seen `lag` steps ago in the current state"""
        return self.alpha * (1.0 - self.alpha) ** lag


@dataclass(frozen=True)
class ScanConfig:
    """Chunked scan parameters"""
    chunk_len: int = 128
    precision: ScanPrecision = ScanPrecision.FP32
    lanes: int = 1
    combine: CombineMode = CombineMode.SEQUENTIAL

    def __post_init__(self):
        if int(self.chunk_len) < 1:
            raise ValueError(f"chunk_len must be >= 1, got {self.chunk_len}")
        if int(self.lanes) < 1:
            raise ValueError(f"lanes must be >= 1, got {self.lanes}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chunk_len": self.chunk_len,
            "precision": self.precision.value,
            "lanes": self.lanes,
            "combine": self.combine.value,
        }


@dataclass
class TraceState:
    """Running EMA state for one decay rate"""
    alpha: float
    h: np.ndarray
    steps: int = 0

    def __post_init__(self):
        validate_alpha(self.alpha)

    @classmethod
    def zeros(cls, alpha: float, dim: int, dtype: Optional[np.dtype] = None) -> 'TraceState':
        return cls(alpha=alpha, h=np.zeros(dim, dtype=dtype or np.float64))

    def update(self, x: np.ndarray) -> np.ndarray:
        a = self.h.dtype.type(self.alpha)
        self.h = (1 - a) * self.h + a * x
        self.steps += 1
        return self.h

    def reset(self) -> None:
        self.h = np.zeros_like(self.h)
        self.steps = 0


@dataclass
class BenchReport:
    """Throughput of the sequential and chunked scans"""
    T: int
    d: int
    chunk_len: int
    lanes: int
    repeats: int
    tok_per_s_seq: float
    tok_per_s_chunked: float
    max_abs_dev: float
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def speedup(self) -> float:
        return self.tok_per_s_chunked / self.tok_per_s_seq if self.tok_per_s_seq > 0 else float("inf")

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "T": self.T,
            "d": self.d,
            "chunk_len": self.chunk_len,
            "lanes": self.lanes,
            "repeats": self.repeats,
            "tok_per_s_seq": self.tok_per_s_seq,
            "tok_per_s_chunked": self.tok_per_s_chunked,
            "speedup": self.speedup,
            "max_abs_dev": self.max_abs_dev,
        }
        data.update(self.extra)
        return data
