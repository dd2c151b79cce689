#!/usr/bin/env python3
"""
⚡ FAST-WEIGHT ENTITIES
======================
Inference-time state of the precision-gated Hebbian layer on top of a trained
static predictor, plus the sweep grid and the reference rows reports are laid
next to.

Domain-Driven Design: Core domain entities.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

PI_MIN = 0.1
LAMBDA_DECAY = 1e-3
RHO = 0.99
EPS_PRECISION = 1e-2
STABILITY_ETA = 1e-6

# Mean streaming PPL per arm on an in-distribution and a shifted domain
SWEEP_REFERENCE: List[Dict[str, Any]] = [
    {"config": "no_pghu", "eta": 0.0, "pi_max": None, "in_distribution": 262, "shifted": 693,
     "in_distribution_delta_pct": None, "shifted_delta_pct": None},
    {"config": "default", "eta": 1e-3, "pi_max": 100.0, "in_distribution": 29000, "shifted": 20000,
     "in_distribution_delta_pct": 11000.0, "shifted_delta_pct": 2800.0},
    {"config": "eta=1e-4,pi_max=1", "eta": 1e-4, "pi_max": 1.0, "in_distribution": 274, "shifted": 678,
     "in_distribution_delta_pct": 4.5, "shifted_delta_pct": -2.2},
    {"config": "eta=1e-5,pi_max=1", "eta": 1e-5, "pi_max": 1.0, "in_distribution": 258, "shifted": 697,
     "in_distribution_delta_pct": -1.7, "shifted_delta_pct": 0.6},
]

# Trace warmup with frozen weights and no fast weights
WARMUP_REFERENCE: List[Dict[str, Any]] = [
    {"domain": "code", "start_ppl": 647, "end_ppl": 89, "change_pct": -86.0},
    {"domain": "math", "start_ppl": 544, "end_ppl": 375, "change_pct": -31.0},
    {"domain": "medical", "start_ppl": 245, "end_ppl": 246, "change_pct": -0.4},
]

AUROC_REFERENCE: Dict[str, float] = {"medical": 0.74, "math": 0.28, "code": 0.03}

# (eta, pi_max) arms streamed by default; (0, 10) is the no-PGHU baseline
DEFAULT_SWEEP_GRID: Tuple[Tuple[float, float], ...] = (
    (0.0, 10.0), (1e-3, 100.0), (1e-4, 1.0), (1e-5, 1.0), (1e-3, 1.0), (1e-4, 100.0), (1e-5, 100.0),
)


@dataclass(frozen=True)
class FastWeightConfig:
    """One arm of the sweep"""
    eta: float
    pi_max: float = 10.0
    delta_only: bool = False

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.pi_max < PI_MIN:
            raise ValueError(f"pi_max must be >= {PI_MIN}")

    @property
    def label(self) -> str:
        if self.eta == 0 and not self.delta_only:
            return "no_pghu"
        base = f"eta={self.eta:g},pi_max={self.pi_max:g}"
        return f"{base},delta_only" if self.delta_only else base


@dataclass
class FastWeightState:
    """
    ⚡ Online predictor for one block: effective weights are base + delta.

    With `delta_only` the base is zero, so the block sees its full input as
    prediction error.
    """
    base: np.ndarray
    delta: np.ndarray
    precision: np.ndarray
    err_var: np.ndarray
    eta: float
    pi_max: float
    pi_min: float = PI_MIN
    lambda_decay: float = LAMBDA_DECAY
    rho: float = RHO
    eps: float = EPS_PRECISION
    steps: int = 0

    def effective(self) -> np.ndarray:
        return self.base + self.delta

    def delta_norm(self) -> float:
        return float(np.linalg.norm(self.delta))


@dataclass
class SweepConfig:
    """Grid of (eta, pi_max) arms over a set of named token streams"""
    grid: List[Tuple[float, float]] = field(default_factory=lambda: list(DEFAULT_SWEEP_GRID))
    window: int = 200
    in_distribution: str = "in_distribution"
    flatness_bins: int = 10

    def __post_init__(self):
        if not any(eta == 0 for eta, _ in self.grid):
            self.grid = [(0.0, 10.0)] + list(self.grid)
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def arms(self) -> List[FastWeightConfig]:
        return [FastWeightConfig(eta=float(eta), pi_max=float(pi_max)) for eta, pi_max in self.grid]

    def baseline(self) -> FastWeightConfig:
        return next(arm for arm in self.arms() if arm.eta == 0)

    def most_aggressive(self) -> Optional[FastWeightConfig]:
        active = [arm for arm in self.arms() if arm.eta > 0]
        return max(active, key=lambda arm: (arm.eta, arm.pi_max)) if active else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": [list(pair) for pair in self.grid],
            "window": self.window,
            "in_distribution": self.in_distribution,
            "flatness_bins": self.flatness_bins,
        }
