#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR THE MICRO TRAINER
===================================
Schedule, clipping, AdamW, batching, determinism and divergence handling.
"""

import math

import numpy as np
import pytest

from conftest import random_ids, tiny_config
from domain.entities.spen_model import TrainingConfig
from domain.exceptions import DivergenceError
from domain.services.spen.model import LossBreakdown, init_model
from domain.services.spen.trainer import (
    AdamW,
    MicroTrainer,
    TrainingResult,
    clip_grads,
    eval_windows,
    global_norm,
    held_out_ce,
    lr_at,
    sample_batch,
    train_micro,
)


def _training(**overrides):
    values = dict(steps=4, batch_size=2, peak_lr=1e-2, seed=0, dtype="float64", log_every=1)
    values.update(overrides)
    return TrainingConfig(**values)


def test_lr_schedule_warmup_then_cosine():
    """Test linear warmup to the peak and cosine decay to the floor"""
    training = TrainingConfig(steps=100, warmup_steps=10, peak_lr=1e-3, min_lr_ratio=0.1)
    assert lr_at(5, training) == pytest.approx(5e-4)
    assert lr_at(10, training) == pytest.approx(1e-3)
    assert lr_at(100, training) == pytest.approx(1e-4)
    rates = [lr_at(s, training) for s in range(10, 101)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_default_warmup_is_five_percent():
    """Test the implicit warmup length"""
    assert TrainingConfig(steps=500).warmup == 25
    assert TrainingConfig(steps=3).warmup == 1
    assert TrainingConfig(steps=10, warmup_steps=0).warmup == 0


def test_clip_grads_rescales_to_max_norm():
    """Test the pre-clip norm is returned and the result has the target norm"""
    grads = {"a": np.array([3.0]), "b": np.array([[4.0]])}
    assert clip_grads(grads, 1.0) == pytest.approx(5.0)
    assert global_norm(grads) == pytest.approx(1.0, abs=1e-6)
    small = {"a": np.array([0.1])}
    clip_grads(small, 1.0)
    assert small["a"][0] == 0.1


def test_adamw_first_step_and_decay():
    """Test a bias-corrected first step and decay on matrices only"""
    training = TrainingConfig(weight_decay=0.5)
    params = {"vec": np.array([1.0]), "mat": np.ones((2, 2))}
    grads = {"vec": np.array([0.5]), "mat": np.zeros((2, 2))}
    optimizer = AdamW(params, training)
    optimizer.step(params, grads, lr=0.1)
    assert params["vec"][0] == pytest.approx(0.9, abs=1e-6)
    np.testing.assert_allclose(params["mat"], np.full((2, 2), 1.0 - 0.1 * 0.5))


def test_sample_batch_shifts_targets():
    """Test inputs and targets are the same window offset by one"""
    tokens = np.arange(100)
    inputs, targets = sample_batch(tokens, 3, 10, np.random.default_rng(0))
    assert inputs.shape == targets.shape == (3, 10)
    assert np.array_equal(inputs[:, 1:], targets[:, :-1])
    assert np.array_equal(targets - inputs, np.ones((3, 10), dtype=np.int64))


def test_eval_windows_cover_the_stream():
    """Test evenly spaced windows and the short-stream error"""
    inputs, targets = eval_windows(np.arange(50), 9, 3)
    assert inputs[0, 0] == 0
    assert targets[-1, -1] == 49
    with pytest.raises(ValueError):
        eval_windows(np.arange(5), 9, 3)


def test_single_step_smoke():
    """Test one step runs and logs a finite loss"""
    result = train_micro(tiny_config(), _training(steps=1), random_ids(200, seed=1))
    assert len(result.curve) == 1
    row = result.curve[0]
    assert set(row) == {"step", "ce", "lb", "lr", "grad_norm"}
    assert math.isfinite(row["ce"]) and math.isfinite(row["grad_norm"])


def test_training_is_deterministic():
    """Test equal seeds give identical loss curves and weights"""
    tokens = random_ids(300, seed=2)
    a = train_micro(tiny_config(), _training(), tokens)
    b = train_micro(tiny_config(), _training(), tokens)
    assert a.curve == b.curve
    assert np.array_equal(a.model.embedding, b.model.embedding)
    c = train_micro(tiny_config(), _training(seed=1), tokens)
    assert c.curve != a.curve


def test_training_learns_a_periodic_stream():
    """Test cross-entropy falls on a deterministic cycle"""
    tokens = np.tile(np.arange(11), 40)
    result = train_micro(tiny_config(), _training(steps=60, batch_size=4, warmup_steps=3), tokens)
    assert result.final_ce < result.curve[0]["ce"] - 0.1
    assert held_out_ce(result.model, tokens) < result.curve[0]["ce"]


def test_short_sequence_length_is_capped():
    """Test a stream shorter than seq_len trains on the whole stream"""
    result = train_micro(tiny_config(seq_len=32), _training(steps=2), random_ids(10, seed=3))
    assert len(result.curve) == 2


def test_stream_validation():
    """Test streams with one token or foreign ids are refused"""
    trainer = MicroTrainer(tiny_config(), _training())
    with pytest.raises(ValueError):
        trainer.train(np.array([1]))
    with pytest.raises(ValueError):
        trainer.train(np.array([1, 2, 99]))


def test_divergence_raises_with_diagnostic(mocker):
    """Test a non-finite loss stops training with a DivergenceError"""
    config = tiny_config()
    model = init_model(config, dtype=np.float64)
    grads = {name: np.zeros_like(p) for name, p in model.named_parameters().items()}
    nan_loss = LossBreakdown(total=float("nan"), ce=float("nan"), lb=1.0, lb_per_block=[1.0, 1.0],
                             per_token_ce=np.zeros(1))
    mocker.patch("domain.services.spen.trainer.loss_and_grads", return_value=(nan_loss, grads))
    with pytest.raises(DivergenceError) as info:
        MicroTrainer(config, _training()).train(random_ids(100), model=model)
    assert info.value.step == 1
    assert info.value.exit_code == 4
    assert "step 1" in info.value.diagnostic()


def test_final_ce_uses_last_tenth():
    """Test final_ce averages the tail of the curve"""
    curve = [{"ce": float(i)} for i in range(20)]
    assert TrainingResult(model=None, curve=curve).final_ce == pytest.approx(18.5)
