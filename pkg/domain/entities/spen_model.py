#!/usr/bin/env python3
"""
🧮 SPEN MODEL ENTITIES
=====================
Configuration and parameter containers for the micro-scale SPEN language model:
per-block EMA trace banks, a predictor, mixers, a sparse FFN and an embedding
shared with the output head.

Domain-Driven Design: Core domain entities. Forward/backward live in
domain.services.spen.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from domain.entities.predictor import PredictorKind

REFERENCE_SPARSITY = 184 / 3072
STE_MODES = ("identity", "masked")


def sparsity_k(d_ff: int) -> int:
    """Top-k count keeping the ~6% active ratio at any FFN width"""
    return max(1, int(round(REFERENCE_SPARSITY * d_ff)))


@dataclass(frozen=True)
class SpenConfig:
    """Architecture of a SPEN model"""
    d_model: int = 128
    d_ff: int = 512
    n_blocks: int = 2
    k_active: int = 31
    vocab_size: int = 96
    seq_len: int = 256
    alpha_fast: float = 0.5
    alpha_mid: float = 0.1
    alpha_slow: float = 0.02
    lb_weight: float = 0.01
    ln_eps: float = 1e-5
    init_std: float = 0.02
    predictor: PredictorKind = PredictorKind.STATIC
    n_heads: int = 1
    linear_gamma: float = 0.999
    projected_dim: int = 0
    ste_mode: str = "identity"
    zero_traces: bool = False
    chunk_len: int = 64

    def __post_init__(self):
        for name in ("d_model", "d_ff", "n_blocks", "k_active", "vocab_size", "seq_len", "n_heads", "chunk_len"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.k_active > self.d_ff:
            raise ValueError(f"k_active={self.k_active} exceeds d_ff={self.d_ff}")
        if not 1.0 >= self.alpha_fast > self.alpha_mid > self.alpha_slow > 0.0:
            raise ValueError("decays must satisfy 1 >= alpha_fast > alpha_mid > alpha_slow > 0")
        if self.ste_mode not in STE_MODES:
            raise ValueError(f"ste_mode must be one of {STE_MODES}")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 < self.linear_gamma <= 1.0:
            raise ValueError("linear_gamma must lie in (0, 1]")
        object.__setattr__(self, "predictor", PredictorKind(self.predictor))

    @property
    def decays(self) -> Tuple[float, float, float]:
        return (self.alpha_fast, self.alpha_mid, self.alpha_slow)

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def projection_width(self) -> int:
        return self.projected_dim or max(1, self.d_model // 4)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["predictor"] = self.predictor.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SpenConfig':
        data = dict(data)
        data["predictor"] = PredictorKind(data.get("predictor", "static"))
        return cls(**data)


@dataclass(frozen=True)
class TrainingConfig:
    """Optimizer and schedule for micro training"""
    steps: int = 500
    batch_size: int = 8
    peak_lr: float = 2e-3
    min_lr_ratio: float = 0.1
    warmup_steps: Optional[int] = None
    beta1: float = 0.9
    beta2: float = 0.95
    adam_eps: float = 1e-8
    weight_decay: float = 0.1
    grad_clip: float = 1.0
    seed: int = 0
    log_every: int = 50
    dtype: str = "float32"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @property
    def warmup(self) -> int:
        if self.warmup_steps is not None:
            return max(0, int(self.warmup_steps))
        return max(1, int(round(0.05 * self.steps)))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class BlockParams:
    """
    Weights of one block. `w_pred` is absent for attention predictors, which
    keep their projections in `predictor`. `buffers` hold frozen matrices.
    """
    w_f: np.ndarray
    w_m: np.ndarray
    w_s: np.ndarray
    w_e: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray
    ln_gain: np.ndarray
    ln_bias: np.ndarray
    w_pred: Optional[np.ndarray] = None
    predictor: Dict[str, np.ndarray] = field(default_factory=dict)
    buffers: Dict[str, np.ndarray] = field(default_factory=dict)

    CORE = ("w_pred", "w_f", "w_m", "w_s", "w_e", "w_up", "w_down", "ln_gain", "ln_bias")

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {name: getattr(self, name) for name in self.CORE if getattr(self, name) is not None}
        for name, value in self.predictor.items():
            params[f"predictor.{name}"] = value
        return params

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.named_parameters().values())


@dataclass
class SpenModel:
    """
    🧮 Micro SPEN language model

    The output head is `embedding` itself (logits = x @ embedding.T); there is
    no separate head matrix to drift out of sync.
    """
    config: SpenConfig
    embedding: np.ndarray
    blocks: List[BlockParams]

    @property
    def dtype(self) -> np.dtype:
        return self.embedding.dtype

    @property
    def head(self) -> np.ndarray:
        return self.embedding

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {"embedding": self.embedding}
        for b, block in enumerate(self.blocks):
            for name, value in block.named_parameters().items():
                params[f"blocks.{b}.{name}"] = value
        return params

    def named_buffers(self) -> Dict[str, np.ndarray]:
        return {f"blocks.{b}.{name}": value for b, block in enumerate(self.blocks)
                for name, value in block.buffers.items()}

    def parameter(self, name: str) -> np.ndarray:
        return self.named_parameters()[name]

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.named_parameters().values()))

    def static_predictors(self) -> List[np.ndarray]:
        """w_pred of every block (static predictor only)"""
        if self.config.predictor is not PredictorKind.STATIC:
            raise ValueError("only the static predictor exposes w_pred")
        return [block.w_pred for block in self.blocks]
