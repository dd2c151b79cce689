#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR STREAMING PERPLEXITY
======================================
Windowed perplexity, position flatness and the fast-weight sweep report.
"""

import numpy as np
import pytest

from conftest import TINY_VOCAB, random_ids
from domain.entities.fast_weights import FastWeightConfig, SweepConfig
from domain.services.fastweights.fast_weight_adapter import FastWeightAdapter
from domain.services.fastweights.streaming_evaluator import StreamingEvaluator, position_flatness
from domain.services.spen.inference import StreamResult, perplexity_stream


def test_position_flatness_trends():
    """Test monotone curves give +-1 and a flat curve gives 0"""
    assert position_flatness(list(range(20)), 10) == pytest.approx(1.0)
    assert position_flatness(list(range(20, 0, -1)), 10) == pytest.approx(-1.0)
    assert position_flatness([3.0] * 20, 10) == 0.0


def test_position_flatness_validation():
    """Test the bin count is checked"""
    with pytest.raises(ValueError):
        position_flatness([1.0, 2.0, 3.0], 1)
    with pytest.raises(ValueError):
        position_flatness([1.0, 2.0, 3.0], 4)


def test_window_count_and_short_stream(static_model):
    """Test trailing partial windows are dropped and a stream needs one full window"""
    result = perplexity_stream(static_model, random_ids(105, seed=1), window=20)
    assert len(result.window_ppl) == 5
    assert result.per_token_ce.shape == (104,)
    assert result.uncertainty == []
    with pytest.raises(ValueError):
        perplexity_stream(static_model, random_ids(20, seed=1), window=20)
    with pytest.raises(ValueError):
        perplexity_stream(static_model, random_ids(50, seed=1), window=0)


def test_uniform_model_has_vocabulary_perplexity(static_model):
    """Test zero logits give PPL = V"""
    static_model.embedding[:] = 0.0
    result = perplexity_stream(static_model, random_ids(41, seed=2), window=10)
    np.testing.assert_allclose(result.window_ppl, TINY_VOCAB, rtol=1e-9)
    assert result.change_pct == pytest.approx(0.0, abs=1e-9)


def test_uncertainty_is_tracked_per_token(static_model):
    """Test an adapter adds one uncertainty value per prediction"""
    adapter = FastWeightAdapter(static_model, FastWeightConfig(eta=0.0))
    result = perplexity_stream(static_model, random_ids(31, seed=3), window=10, adapter=adapter)
    assert len(result.uncertainty) == 30


def test_stream_result_summary():
    """Test start, end and relative change"""
    result = StreamResult(window=10, window_ppl=[200.0, 150.0, 100.0], per_token_ce=np.zeros(30))
    assert result.start_ppl == 200.0
    assert result.end_ppl == 100.0
    assert result.change_pct == pytest.approx(-50.0)
    assert result.to_dict()["change_pct"] == pytest.approx(-50.0)


def test_sweep_report(static_model):
    """Test sweep rows, warmup, stability, flatness and AUROC on a tiny model"""
    sweep = SweepConfig(grid=[(1e-3, 1.0)], window=10, flatness_bins=2)
    domains = {"in_distribution": random_ids(61, seed=4), "shifted": random_ids(61, seed=5)}
    report = StreamingEvaluator(static_model, sweep).evaluate(domains)

    assert [row["config"] for row in report.sweep] == ["no_pghu", "eta=0.001,pi_max=1"]
    assert report.sweep[0]["in_distribution_delta_pct"] is None
    assert report.sweep[1]["shifted_delta_pct"] is not None
    assert [row["domain"] for row in report.warmup] == ["in_distribution", "shifted"]
    assert set(report.stability) >= {"eta", "ppl", "baseline_ppl", "change_pct", "max_delta_norm"}
    assert -1.0 <= report.flatness <= 1.0
    assert set(report.uncertainty_auroc) == {"shifted"}
    assert 0.0 <= report.uncertainty_auroc["shifted"] <= 1.0
    assert len(report.curves_frame()) == 2 * 2 * 6
    assert "reference" in report.to_dict()


def test_sweep_requires_in_distribution_stream(static_model):
    """Test the in-distribution key is mandatory"""
    with pytest.raises(ValueError):
        StreamingEvaluator(static_model, SweepConfig(window=10)).evaluate({"shifted": random_ids(30)})


def test_stability_envelope_stays_within_two_percent(static_model):
    """Test a tiny learning rate moves in-distribution PPL by less than 2%"""
    evaluator = StreamingEvaluator(static_model, SweepConfig(window=20))
    tokens = random_ids(201, seed=6)
    baseline = float(np.mean(evaluator.plain(tokens).window_ppl))
    envelope = evaluator.stability_envelope(tokens, baseline)
    assert envelope["baseline_ppl"] == baseline
    assert abs(envelope["change_pct"]) < 2.0
    assert 0.0 < envelope["max_delta_norm"] < 1e-2
