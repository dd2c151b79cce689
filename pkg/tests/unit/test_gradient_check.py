#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR SPEN GRADIENTS
================================
Hand-written backward pass against central finite differences in float64.
"""

import numpy as np
import pytest

from conftest import random_ids, tiny_config, tiny_model
from domain.entities.predictor import PredictorKind
from domain.services.spen.gradient_check import GradientCheckReport, check_gradients, relative_error


def _batch(seed, batch=1, n=12):
    ids = random_ids(n + 1, seed=seed, batch=batch)
    return ids[:, :-1], ids[:, 1:]


def test_static_model_gradients_match_finite_differences():
    """Test every parameter entry of a d=8, d_ff=16, two-block model on 12 tokens"""
    model = tiny_model(tiny_config(ste_mode="masked"), seed=0)
    inputs, targets = _batch(seed=0)
    report = check_gradients(model, inputs, targets, eps=1e-5)
    assert report.passed(1e-3), report.failures(1e-3)
    assert report.checked["embedding"] > 0
    assert report.checked["blocks.1.w_up"] > 0


@pytest.mark.parametrize("kind", [
    PredictorKind.PROJECTED_STATIC,
    PredictorKind.LINEAR_ATTENTION,
    PredictorKind.SOFTMAX_ATTENTION,
], ids=lambda kind: kind.value)
def test_predictor_gradients_match_finite_differences(kind):
    """Test sampled entries for every predictor head on a two-sequence batch"""
    model = tiny_model(tiny_config(kind, ste_mode="masked"), seed=1)
    inputs, targets = _batch(seed=1, batch=2)
    report = check_gradients(model, inputs, targets, eps=1e-5, max_entries=24, seed=1)
    assert report.passed(1e-3), report.failures(1e-3)
    assert any(name.startswith("blocks.0.predictor.") or name.endswith("w_pred") for name in report.checked)


def test_untied_head_gradient():
    """Test the separate head gradient when the output head is untied"""
    model = tiny_model(tiny_config(ste_mode="masked", n_blocks=1), seed=2)
    inputs, targets = _batch(seed=2)
    head = model.embedding.copy() + 0.05
    report = check_gradients(model, inputs, targets, eps=1e-5, max_entries=20, head_weight=head)
    assert "head" in report.checked
    assert report.passed(1e-3), report.failures(1e-3)


def test_relative_error_floor():
    """Test round-off on near-zero entries does not count as error"""
    assert relative_error(0.0, 1e-10) == pytest.approx(1e-4)
    assert relative_error(1.0, 1.001) == pytest.approx(0.001 / 1.001)


def test_report_helpers():
    """Test worst, passed and failures"""
    report = GradientCheckReport(max_rel_error={"a": 1e-5, "b": 2e-3})
    assert report.worst == 2e-3
    assert not report.passed(1e-3)
    assert report.failures(1e-3) == ["b"]
    assert GradientCheckReport().passed()
