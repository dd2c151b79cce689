#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR INFERENCE-TIME FAST WEIGHTS
=============================================
Hebbian update by hand, precision tracking, uncertainty and AUROC.
"""

import numpy as np
import pytest

from conftest import random_ids, tiny_config, tiny_model
from domain.entities.fast_weights import FastWeightConfig, SweepConfig
from domain.entities.predictor import PredictorKind
from domain.services.fastweights.fast_weight_adapter import (
    FastWeightAdapter,
    auroc,
    init_fast_weights,
    pghu_infer_step,
    uncertainty,
)
from domain.services.spen.inference import SpenInferenceSession


def test_init_matches_static_predictor():
    """Test effective weights start at w_pred with unit precision"""
    w = np.arange(6.0).reshape(2, 3)
    fw = init_fast_weights(w, eta=1e-3, pi_max=10.0)
    assert np.array_equal(fw.effective(), w)
    assert fw.precision.tolist() == [1.0, 1.0]
    assert fw.base is not w
    assert not init_fast_weights(w, delta_only=True).base.any()


def test_hand_step():
    """Test one update on a 2x2 delta-only layer"""
    fw = init_fast_weights(np.eye(2), eta=0.1, pi_max=10.0, delta_only=True)
    pghu_infer_step(fw, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(fw.delta, [[0.1, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(fw.err_var, [0.9901, 0.9801])
    np.testing.assert_allclose(fw.precision, [1 / 1.0001, 1 / 0.9901])
    assert fw.steps == 1


def test_perfect_prediction_only_decays():
    """Test a zero residual leaves only the weight decay"""
    w = np.array([[0.5, -0.2], [0.1, 0.3]])
    fw = init_fast_weights(w, eta=0.1, pi_max=10.0)
    fw.delta = np.full((2, 2), 0.5)
    h = np.array([0.6, 0.8])
    pghu_infer_step(fw, fw.effective() @ h, h)
    np.testing.assert_allclose(fw.delta, np.full((2, 2), 0.5 * (1 - 1e-3)))


def test_zero_learning_rate_keeps_delta_zero():
    """Test eta = 0 only tracks precision"""
    fw = init_fast_weights(np.eye(3), eta=0.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        pghu_infer_step(fw, rng.standard_normal(3), rng.standard_normal(3))
    assert not fw.delta.any()
    assert np.all(fw.precision <= 10.0) and np.all(fw.precision >= 0.1)


def test_uncertainty():
    """Test U = mean(1/pi)"""
    fw = init_fast_weights(np.eye(2))
    assert uncertainty(fw) == pytest.approx(1.0)
    fw.precision = np.array([10.0, 0.1])
    assert uncertainty(fw) == pytest.approx(5.05)


def test_auroc_extremes_and_ties():
    """Test separable, swapped and tied scores"""
    assert auroc([0.1, 0.2], [0.3, 0.4]) == 1.0
    assert auroc([0.3, 0.4], [0.1, 0.2]) == 0.0
    assert auroc([0.5, 0.5], [0.5, 0.5]) == 0.5
    with pytest.raises(ValueError):
        auroc([], [1.0])


def test_auroc_matches_pairwise_count():
    """Test against the pairwise definition"""
    rng = np.random.default_rng(1)
    id_scores = rng.integers(0, 5, 30).astype(float)
    ood_scores = rng.integers(1, 6, 20).astype(float)
    pairs = [(1.0 if o > i else 0.5 if o == i else 0.0) for i in id_scores for o in ood_scores]
    assert auroc(id_scores, ood_scores) == pytest.approx(np.mean(pairs))


def test_config_labels_and_validation():
    """Test arm labels and bounds"""
    assert FastWeightConfig(eta=0.0).label == "no_pghu"
    assert FastWeightConfig(eta=1e-4, pi_max=1.0).label == "eta=0.0001,pi_max=1"
    assert FastWeightConfig(eta=1e-3, pi_max=1.0, delta_only=True).label.endswith("delta_only")
    with pytest.raises(ValueError):
        FastWeightConfig(eta=-1.0)
    with pytest.raises(ValueError):
        FastWeightConfig(eta=1e-3, pi_max=0.05)


def test_sweep_always_has_a_baseline():
    """Test an eta = 0 arm is added when the grid lacks one"""
    sweep = SweepConfig(grid=[(1e-3, 1.0)])
    assert sweep.baseline().label == "no_pghu"
    assert sweep.most_aggressive().eta == 1e-3
    with pytest.raises(ValueError):
        SweepConfig(window=0)


def test_adapter_requires_static_predictor():
    """Test attention predictors are refused"""
    model = tiny_model(tiny_config(PredictorKind.LINEAR_ATTENTION))
    with pytest.raises(ValueError):
        FastWeightAdapter(model, FastWeightConfig(eta=1e-3))


def test_zero_rate_adapter_reproduces_plain_inference(static_model):
    """Test eta = 0 gives the same logits as the frozen model"""
    ids = random_ids(30, seed=4)
    plain = SpenInferenceSession(static_model).run(ids)
    adapter = FastWeightAdapter(static_model, FastWeightConfig(eta=0.0))
    adapted = SpenInferenceSession(static_model, adapter).run(ids)
    assert np.array_equal(plain, adapted)
    assert adapter.max_delta_norm == 0.0
    assert [s.steps for s in adapter.states] == [30, 30]


def test_adapter_learns_and_leaves_model_untouched(static_model):
    """Test fast weights move while the trained predictor stays frozen"""
    w_pred = [w.copy() for w in static_model.static_predictors()]
    adapter = FastWeightAdapter(static_model, FastWeightConfig(eta=1e-2, pi_max=1.0))
    SpenInferenceSession(static_model, adapter).run(random_ids(30, seed=5))
    assert adapter.max_delta_norm > 0
    for before, after in zip(w_pred, static_model.static_predictors()):
        assert np.array_equal(before, after)
    assert adapter.uncertainty() >= 1.0


@pytest.mark.parametrize("eta,pi_max", [(1e-4, 1.0), (1e-6, 10.0)])
def test_delta_norm_bounded_over_a_long_stream(eta, pi_max):
    """Test the decayed Hebbian delta stays bounded over 10K tokens"""
    rng = np.random.default_rng(7)
    fw = init_fast_weights(np.zeros((8, 8)), eta=eta, pi_max=pi_max, delta_only=True)
    norms = []
    for _ in range(10_000):
        x = np.clip(rng.standard_normal(8), -3.0, 3.0)
        h = rng.standard_normal(8)
        pghu_infer_step(fw, x, h / np.linalg.norm(h))
        norms.append(fw.delta_norm())
    # ||delta|| <= eta pi^2 ||x||max / (lambda - eta pi^2) with ||x|| <= 3 sqrt(8)
    assert np.all(np.isfinite(norms))
    assert max(norms) <= 1.0
    assert fw.steps == 10_000
