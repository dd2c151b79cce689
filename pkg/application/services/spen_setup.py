#!/usr/bin/env python3
"""
🧰 SPEN SETUP
============
Builds SPEN configs and token streams from a resolved experiment config.
Shared by the train, ablate and stream use cases.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from domain.entities.predictor import PredictorKind
from domain.entities.spen_model import SpenConfig, TrainingConfig
from domain.exceptions import ConfigError
from domain.services.spen.synthetic_corpus import grammar_text
from domain.services.spen.tokenizer import CharTokenizer
from infrastructure.config.experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)


def spen_config_from(cfg: ExperimentConfig, predictor: Optional[str] = None) -> SpenConfig:
    try:
        return SpenConfig(
            d_model=cfg["d_model"],
            d_ff=cfg["d_ff"],
            n_blocks=cfg["n_blocks"],
            k_active=cfg["k_active"],
            vocab_size=CharTokenizer().vocab_size,
            seq_len=cfg["seq_len"],
            lb_weight=cfg["lb_weight"],
            predictor=PredictorKind(predictor or cfg["predictor"]),
            n_heads=cfg["n_heads"],
            ste_mode=cfg["ste_mode"],
            chunk_len=cfg["chunk_len"],
        )
    except ValueError as e:
        raise ConfigError(f"invalid SPEN configuration: {e}") from None


def training_config_from(cfg: ExperimentConfig) -> TrainingConfig:
    try:
        return TrainingConfig(
            steps=cfg["steps"],
            batch_size=cfg["batch_size"],
            peak_lr=cfg["peak_lr"],
            warmup_steps=None if cfg["warmup_steps"] < 0 else cfg["warmup_steps"],
            weight_decay=cfg["weight_decay"],
            grad_clip=cfg["grad_clip"],
            seed=cfg["seed"],
            log_every=cfg["log_every"],
            dtype=cfg["dtype"],
        )
    except ValueError as e:
        raise ConfigError(f"invalid training configuration: {e}") from None


def corpus_text(cfg: ExperimentConfig) -> str:
    if cfg["corpus"]:
        path = Path(cfg["corpus"])
        if not path.is_file():
            raise ConfigError(f"corpus not found: {path}")
        return path.read_text(encoding="utf-8")
    return grammar_text(cfg["seed"], cfg["n_sentences"])


def corpus_tokens(cfg: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    """(train, held-out) token streams; the held-out part is the corpus tail"""
    tokens = CharTokenizer(strict=False).encode(corpus_text(cfg))
    fraction = float(cfg["eval_fraction"])
    if not 0.0 < fraction < 1.0:
        raise ConfigError("eval_fraction must lie in (0, 1)")
    cut = int(round(tokens.size * (1.0 - fraction)))
    train, held_out = tokens[:cut], tokens[cut:]
    if train.size < 2 or held_out.size < 2:
        raise ConfigError(f"corpus of {tokens.size} characters is too small to split")
    logger.info(f"📊 Corpus: {train.size} training and {held_out.size} held-out characters")
    return train, held_out
