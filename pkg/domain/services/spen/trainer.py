#!/usr/bin/env python3
"""
🏋️ SPEN MICRO TRAINER
====================
AdamW with linear warmup and cosine decay, global-norm clipping and random
windows of a token stream as batches. Fully deterministic per seed.

Domain-Driven Design: Domain service producing a trained SpenModel.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from domain.entities.spen_model import SpenConfig, SpenModel, TrainingConfig
from domain.exceptions import DivergenceError
from domain.services.spen.model import evaluate_loss, init_model, loss_and_grads


def lr_at(step: int, training: TrainingConfig) -> float:
    """Learning rate for 1-indexed `step`"""
    peak = training.peak_lr
    floor = peak * training.min_lr_ratio
    warmup = training.warmup
    if warmup and step <= warmup:
        return peak * step / warmup
    span = max(1, training.steps - warmup)
    progress = min(1.0, (step - warmup) / span)
    return floor + (peak - floor) * 0.5 * (1.0 + math.cos(math.pi * progress))


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def clip_grads(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Scales `grads` in place; returns the pre-clip norm"""
    norm = global_norm(grads)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-6)
        for name in grads:
            grads[name] = grads[name] * scale
    return norm


class AdamW:
    """Decoupled weight decay, applied to matrices only"""

    def __init__(self, params: Dict[str, np.ndarray], training: TrainingConfig):
        self.training = training
        self.m = {name: np.zeros_like(p) for name, p in params.items()}
        self.v = {name: np.zeros_like(p) for name, p in params.items()}
        self.t = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], lr: float) -> None:
        cfg = self.training
        self.t += 1
        c1 = 1.0 - cfg.beta1 ** self.t
        c2 = 1.0 - cfg.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            self.m[name] = cfg.beta1 * self.m[name] + (1.0 - cfg.beta1) * g
            self.v[name] = cfg.beta2 * self.v[name] + (1.0 - cfg.beta2) * g * g
            update = (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + cfg.adam_eps)
            if p.ndim >= 2 and cfg.weight_decay:
                update = update + cfg.weight_decay * p
            p -= (lr * update).astype(p.dtype, copy=False)


def sample_batch(tokens: np.ndarray, batch_size: int, seq_len: int,
                 rng: np.random.Generator) -> tuple:
    """Random windows of seq_len + 1 tokens split into (inputs, targets)"""
    starts = rng.integers(0, tokens.size - seq_len, size=batch_size)
    windows = np.stack([tokens[s:s + seq_len + 1] for s in starts])
    return windows[:, :-1], windows[:, 1:]


def eval_windows(tokens: np.ndarray, seq_len: int, n_windows: int) -> tuple:
    """Evenly spaced fixed windows for held-out evaluation"""
    span = tokens.size - seq_len - 1
    if span < 0:
        raise ValueError(f"evaluation stream of {tokens.size} tokens is shorter than seq_len + 1")
    starts = np.linspace(0, span, num=max(1, n_windows)).astype(np.int64)
    windows = np.stack([tokens[s:s + seq_len + 1] for s in starts])
    return windows[:, :-1], windows[:, 1:]


@dataclass
class TrainingResult:
    model: SpenModel
    curve: List[Dict[str, float]] = field(default_factory=list)

    @property
    def final_ce(self) -> float:
        tail = self.curve[-max(1, len(self.curve) // 10):]
        return float(np.mean([row["ce"] for row in tail]))


class MicroTrainer:
    """
    🏋️ Trains a SpenModel on a token stream
    """

    def __init__(self, config: SpenConfig, training: TrainingConfig):
        self.config = config
        self.training = training
        self.logger = logging.getLogger(__name__)

    def _seq_len(self, tokens: np.ndarray) -> int:
        if tokens.size < 2:
            raise ValueError("training stream needs at least two tokens")
        return min(self.config.seq_len, tokens.size - 1)

    def train(self, tokens: np.ndarray, model: Optional[SpenModel] = None) -> TrainingResult:
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.size and tokens.max() >= self.config.vocab_size:
            raise ValueError(f"token ids must lie in [0, {self.config.vocab_size})")
        seq_len = self._seq_len(tokens)
        cfg = self.training
        dtype = np.dtype(cfg.dtype)
        if model is None:
            model = init_model(self.config, seed=cfg.seed, dtype=dtype)
        rng = np.random.default_rng(cfg.seed + 1)
        params = model.named_parameters()
        optimizer = AdamW(params, cfg)
        result = TrainingResult(model=model)
        last_finite: Optional[float] = None
        warned_lb = False

        self.logger.info(f"🚀 Training {model.n_parameters():,} parameters for {cfg.steps} steps "
                         f"(batch {cfg.batch_size} x {seq_len}, predictor {self.config.predictor.value})")
        for step in range(1, cfg.steps + 1):
            inputs, targets = sample_batch(tokens, cfg.batch_size, seq_len, rng)
            loss, grads = loss_and_grads(model, inputs, targets)
            norm = clip_grads(grads, cfg.grad_clip)
            if not (math.isfinite(loss.total) and math.isfinite(norm)):
                self.logger.error(f"❌ Divergence at step {step}: loss={loss.total}, grad_norm={norm}")
                raise DivergenceError("training loss became non-finite", step=step,
                                      last_finite_loss=last_finite, grad_norm=norm)
            if loss.lb < 1.0 - 1e-9 and not warned_lb:
                self.logger.warning(f"⚠️ Load-balance loss {loss.lb:.6f} below 1 at step {step}")
                warned_lb = True
            lr = lr_at(step, cfg)
            optimizer.step(params, grads, lr)
            last_finite = loss.total
            result.curve.append({"step": step, "ce": loss.ce, "lb": loss.lb, "lr": lr, "grad_norm": norm})
            if step % max(1, cfg.log_every) == 0 or step == cfg.steps:
                self.logger.info(f"📊 step {step}/{cfg.steps} ce={loss.ce:.4f} lb={loss.lb:.4f} "
                                 f"lr={lr:.2e} |g|={norm:.3f}")

        if not all(block.all_finite() for block in model.blocks):
            raise DivergenceError("parameters became non-finite", step=cfg.steps,
                                  last_finite_loss=last_finite)
        self.logger.info(f"✅ Training finished: final ce {result.final_ce:.4f}")
        return result


def train_micro(config: SpenConfig, training: TrainingConfig, tokens: np.ndarray) -> TrainingResult:
    return MicroTrainer(config, training).train(tokens)


def held_out_ce(model: SpenModel, tokens: np.ndarray, n_windows: int = 8) -> float:
    """Mean next-token CE over fixed evenly spaced windows"""
    tokens = np.asarray(tokens, dtype=np.int64)
    seq_len = min(model.config.seq_len, tokens.size - 1)
    inputs, targets = eval_windows(tokens, seq_len, n_windows)
    return evaluate_loss(model, inputs, targets).ce
