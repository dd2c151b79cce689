#!/usr/bin/env python3
"""
🧪 SHARED TEST FIXTURES
======================
Tiny SPEN configurations and models small enough for finite differences.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from domain.entities.predictor import PredictorKind  # noqa: E402
from domain.entities.spen_model import SpenConfig  # noqa: E402
from domain.services.spen.model import init_model  # noqa: E402

TINY_VOCAB = 11


def tiny_config(predictor: PredictorKind = PredictorKind.STATIC, **overrides) -> SpenConfig:
    """d=8, d_ff=16, two blocks; chunk_len 5 so sequences span several chunks"""
    values = dict(d_model=8, d_ff=16, n_blocks=2, k_active=4, vocab_size=TINY_VOCAB, seq_len=32,
                  init_std=0.3, chunk_len=5, predictor=predictor, n_heads=2)
    values.update(overrides)
    return SpenConfig(**values)


def tiny_model(config: SpenConfig, seed: int = 0, dtype=np.float64, w_down_std: float = 0.3):
    """init_model plus a random W_down so every block does real work"""
    model = init_model(config, seed=seed, dtype=dtype)
    rng = np.random.default_rng(seed + 100)
    for block in model.blocks:
        block.w_down[...] = (rng.standard_normal(block.w_down.shape) * w_down_std).astype(dtype)
    return model


def random_ids(n: int, seed: int = 0, vocab: int = TINY_VOCAB, batch: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    shape = (batch, n) if batch else (n,)
    return rng.integers(0, vocab, size=shape)


@pytest.fixture
def static_config() -> SpenConfig:
    return tiny_config()


@pytest.fixture
def static_model(static_config):
    return tiny_model(static_config)


@pytest.fixture(params=list(PredictorKind), ids=lambda kind: kind.value)
def any_predictor(request) -> PredictorKind:
    return request.param
