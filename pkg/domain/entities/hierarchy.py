#!/usr/bin/env python3
"""
🧠 HIERARCHY ENTITIES
====================
State containers for the four-level sparse predictive coding hierarchy:
per-level configuration, column state, weights, the SPA ring buffer and the
hierarchy aggregate.

Domain-Driven Design: Core domain entities. Dynamics live in
domain.services.spcn.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional, Tuple

import numpy as np

ALPHA_FAST_PER_LEVEL: Tuple[float, ...] = (0.5, 0.2, 0.1, 0.05)
SLOW_TO_FAST_RATIO = 0.15
DEFAULT_DIMS: Tuple[int, ...] = (512, 256, 128, 64)
N_LEVELS = 4


def default_k_active(dim: int) -> int:
    """5% of the level width, at least 4"""
    return max(4, int(round(0.05 * dim)))


@dataclass(frozen=True)
class LevelConfig:
    """Width, sparsity and trace decays of one level"""
    dim: int
    k_active: int
    alpha_fast: float
    alpha_slow: float

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not 0 < self.k_active <= self.dim:
            raise ValueError(f"k_active={self.k_active} must lie in [1, dim={self.dim}]")
        if not 0.0 < self.alpha_fast <= 1.0 or not 0.0 < self.alpha_slow <= 1.0:
            raise ValueError("trace decays must lie in (0, 1]")
        if abs(self.alpha_slow - SLOW_TO_FAST_RATIO * self.alpha_fast) > 1e-12:
            raise ValueError("alpha_slow must equal 0.15 * alpha_fast")

    @classmethod
    def for_level(cls, dim: int, alpha_fast: float, k_active: Optional[int] = None) -> 'LevelConfig':
        return cls(
            dim=dim,
            k_active=default_k_active(dim) if k_active is None else int(k_active),
            alpha_fast=alpha_fast,
            alpha_slow=SLOW_TO_FAST_RATIO * alpha_fast,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "k_active": self.k_active,
            "alpha_fast": self.alpha_fast,
            "alpha_slow": self.alpha_slow,
        }


@dataclass
class ColumnState:
    """Activation, traces and precision of one level"""
    x: np.ndarray
    trace_fast: np.ndarray
    trace_slow: np.ndarray
    precision: np.ndarray
    err_var: np.ndarray

    @classmethod
    def initial(cls, dim: int) -> 'ColumnState':
        return cls(
            x=np.zeros(dim),
            trace_fast=np.zeros(dim),
            trace_slow=np.zeros(dim),
            precision=np.ones(dim),
            err_var=np.zeros(dim),
        )

    def reset_sentence(self) -> None:
        """Zero activation and traces; precision and error variance persist"""
        self.x = np.zeros_like(self.x)
        self.trace_fast = np.zeros_like(self.trace_fast)
        self.trace_slow = np.zeros_like(self.trace_slow)


@dataclass
class LevelWeights:
    """Frozen feedforward and lateral matrices, learned feedback matrix"""
    w_ff: np.ndarray
    w_lat: np.ndarray
    w_fb: Optional[np.ndarray] = None


@dataclass
class Level:
    config: LevelConfig
    state: ColumnState
    weights: LevelWeights


@dataclass
class SpaBuffer:
    """Ring of recent settled L0 states"""
    capacity: int = 8
    top_k_retrieve: int = 4
    ring: Deque[np.ndarray] = field(default_factory=deque)

    def __post_init__(self):
        self.ring = deque(self.ring, maxlen=self.capacity)

    def append(self, state: np.ndarray) -> None:
        self.ring.append(np.array(state, copy=True))

    def clear(self) -> None:
        self.ring.clear()

    def __len__(self) -> int:
        return len(self.ring)


@dataclass(frozen=True)
class HierarchyOptions:
    """Machinery switches: SPA context and PGHU learning"""
    use_spa: bool = True
    learn: bool = True


@dataclass
class Hierarchy:
    """
    🧠 Four-level hierarchy

    mix holds the (feedforward, feedback, lateral) pathway weights.
    """
    levels: List[Level]
    spa: SpaBuffer
    input_dim: int
    seed: int
    settle_steps: int = 3
    mix: Tuple[float, float, float] = (1.0, 0.5, 0.3)
    eta: float = 0.01
    lambda_decay: float = 0.001
    rho: float = 0.99
    eps_precision: float = 1e-2
    pi_min: float = 0.1
    pi_max: float = 10.0
    options: HierarchyOptions = field(default_factory=HierarchyOptions)
    tokens_seen: int = 0

    def __post_init__(self):
        if len(self.levels) != N_LEVELS:
            raise ValueError(f"hierarchy needs exactly {N_LEVELS} levels, got {len(self.levels)}")
        if self.levels[-1].weights.w_fb is not None:
            raise ValueError("top level has no feedback matrix")

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(level.config.dim for level in self.levels)

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    def states(self) -> List[np.ndarray]:
        return [level.state.x for level in self.levels]

    def reset_sentence(self) -> None:
        for level in self.levels:
            level.state.reset_sentence()
        self.spa.clear()

    def config_dict(self) -> Dict[str, Any]:
        return {
            "levels": [level.config.to_dict() for level in self.levels],
            "input_dim": self.input_dim,
            "seed": self.seed,
            "settle_steps": self.settle_steps,
            "mix": list(self.mix),
            "eta": self.eta,
            "lambda_decay": self.lambda_decay,
            "rho": self.rho,
            "eps_precision": self.eps_precision,
            "pi_min": self.pi_min,
            "pi_max": self.pi_max,
            "spa_capacity": self.spa.capacity,
            "spa_top_k": self.spa.top_k_retrieve,
            "use_spa": self.options.use_spa,
            "learn": self.options.learn,
        }


@dataclass
class Representations:
    """
    Per-token representation blocks for a corpus.

    Blocks are stored once (float32, row = token) and named kinds are
    concatenations of blocks, so `combined` costs no extra memory until asked for.
    """
    blocks: Dict[str, np.ndarray]
    n_levels: int = N_LEVELS

    KINDS = (
        "activation", "traces", "combined",
        "fwd_activation", "fwd_traces", "fwd_combined",
        "fast_traces", "fast_combined",
    )

    @property
    def n_tokens(self) -> int:
        return next(iter(self.blocks.values())).shape[0] if self.blocks else 0

    def kinds(self) -> List[str]:
        return list(self.KINDS) + [f"level_traces_{lvl}" for lvl in range(self.n_levels)]

    def layout(self, kind: str) -> List[str]:
        if kind == "activation":
            return ["fwd_x_0", "bwd_x_0"]
        if kind == "traces":
            return ["fwd_tf_0", "fwd_ts_0", "bwd_tf_0", "bwd_ts_0"]
        if kind == "combined":
            return self.layout("activation") + self.layout("traces")
        if kind == "fwd_activation":
            return ["fwd_x_0"]
        if kind == "fwd_traces":
            return ["fwd_tf_0", "fwd_ts_0"]
        if kind == "fwd_combined":
            return ["fwd_x_0", "fwd_tf_0", "fwd_ts_0"]
        if kind == "fast_traces":
            return ["fwd_tf_0", "bwd_tf_0"]
        if kind == "fast_combined":
            return self.layout("activation") + self.layout("fast_traces")
        if kind.startswith("level_traces_"):
            lvl = int(kind.rsplit("_", 1)[1])
            return [f"fwd_tf_{lvl}", f"fwd_ts_{lvl}", f"bwd_tf_{lvl}", f"bwd_ts_{lvl}"]
        raise KeyError(f"unknown representation kind {kind!r}")

    def get(self, kind: str) -> np.ndarray:
        names = self.layout(kind)
        missing = [n for n in names if n not in self.blocks]
        if missing:
            raise KeyError(f"representation {kind!r} needs missing blocks {missing}")
        if len(names) == 1:
            return self.blocks[names[0]]
        return np.concatenate([self.blocks[n] for n in names], axis=1)

    def dim(self, kind: str) -> int:
        return sum(self.blocks[n].shape[1] for n in self.layout(kind))
