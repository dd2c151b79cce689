#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR PREDICTOR HEADS
=================================
Static, linear-attention and softmax-attention predictors: hand cases, running
state against the explicit causal sum, and normalisation.
"""

import numpy as np
import pytest

from conftest import tiny_config, tiny_model
from domain.entities.predictor import PredictorKind
from domain.services.spen.predictors import (
    LinearAttentionState,
    PredictorHead,
    SoftmaxAttentionState,
    attention_weights,
    causal_decay,
    normalize_backward,
    normalize_trace,
    predict_linear_attn,
    predict_softmax_attn,
    predict_static,
)


def _linear_params(d, seed):
    rng = np.random.default_rng(seed)
    return {name: rng.standard_normal((d, d)) / np.sqrt(d) for name in ("w_q", "w_k", "w_v")}


def _softmax_params(d, heads, seed):
    rng = np.random.default_rng(seed)
    e = d // heads
    params = {name: rng.standard_normal((heads, e, d)) for name in ("w_q", "w_v")}
    params["w_k"] = rng.standard_normal((heads, e, 2 * d))
    params["w_o"] = rng.standard_normal((d, heads * e))
    return params


def test_static_identity_and_zero():
    """Test W = I maps e_1 to e_1 and a zero trace predicts zero"""
    e1 = np.eye(4)[0]
    assert predict_static(np.eye(4), 3.0 * e1).tolist() == e1.tolist()
    assert not predict_static(np.eye(4), np.zeros(4)).any()


def test_static_hand_case():
    """Test x_hat = W h / ||h|| on d = 4"""
    w = np.arange(16, dtype=np.float64).reshape(4, 4)
    h = np.array([1.0, 2.0, 2.0, 4.0])
    np.testing.assert_allclose(predict_static(w, h), w @ (h / 5.0), atol=1e-12)


def test_normalize_guard():
    """Test norms below 1e-8 normalise to zero"""
    h_bar, norm = normalize_trace(np.array([1e-9, 0.0, 0.0]))
    assert not h_bar.any()
    h_bar, _ = normalize_trace(np.array([[3.0, 4.0]]))
    np.testing.assert_allclose(h_bar, [[0.6, 0.8]])


def test_normalize_backward_finite_difference():
    """Test the gradient of w . (h / ||h||)"""
    rng = np.random.default_rng(0)
    h = rng.standard_normal(5)
    w = rng.standard_normal(5)
    h_bar, norm = normalize_trace(h)
    grad = normalize_backward(w, h_bar, norm)
    eps = 1e-6
    numeric = [(w @ normalize_trace(h + eps * e)[0] - w @ normalize_trace(h - eps * e)[0]) / (2 * eps)
               for e in np.eye(5)]
    np.testing.assert_allclose(grad, numeric, atol=1e-8)


def test_causal_decay_matrix():
    """Test G[t, s] = gamma^(t-1-s) strictly below the diagonal"""
    g = causal_decay(3, 0.5)
    assert g.tolist() == [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1.0, 0.0]]


def test_linear_attention_empty_and_single_history():
    """Test no history predicts zero and one past element gives (q . k_0) v_0"""
    params = _linear_params(4, seed=1)
    rng = np.random.default_rng(2)
    h0, x0, h1 = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(4)
    assert not predict_linear_attn(params, h1, []).any()
    expected = float((params["w_q"] @ h1) @ (params["w_k"] @ h0)) * (params["w_v"] @ x0)
    np.testing.assert_allclose(predict_linear_attn(params, h1, [(h0, x0)]), expected, atol=1e-12)


def test_linear_running_state_matches_explicit_sum():
    """Test the outer-product state against the quadratic sum on T = 64, d = 16"""
    d, T, gamma = 16, 64, 0.999
    params = _linear_params(d, seed=3)
    rng = np.random.default_rng(4)
    hs = normalize_trace(rng.standard_normal((T, d)))[0]
    xs = rng.standard_normal((T, d))
    state = LinearAttentionState(params, gamma)
    history = []
    for t in range(T):
        running = state.predict(hs[t])
        explicit = predict_linear_attn(params, hs[t], history, gamma)
        np.testing.assert_allclose(running, explicit, atol=1e-6)
        state.push(hs[t], xs[t])
        history.append((hs[t], xs[t]))


def test_linear_sequence_form_matches_step_form():
    """Test the masked matrix form used in training against the running state"""
    config = tiny_config(PredictorKind.LINEAR_ATTENTION)
    model = tiny_model(config, seed=5)
    block = model.blocks[0]
    rng = np.random.default_rng(5)
    hs = normalize_trace(rng.standard_normal((20, 8)))[0]
    xs = rng.standard_normal((20, 8))
    seq, _ = PredictorHead(config).forward(block, hs[None], xs[None])
    state = PredictorHead(config).new_state(block)
    for t in range(20):
        np.testing.assert_allclose(seq[0, t], state.predict(hs[t]), atol=1e-12)
        state.push(hs[t], xs[t])


def test_softmax_singleton_history():
    """Test one past element yields its value projection"""
    params = _softmax_params(4, heads=2, seed=6)
    rng = np.random.default_rng(7)
    h0, x0, h1 = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(4)
    values = np.einsum("hed,d->he", params["w_v"], h0).reshape(-1)
    np.testing.assert_allclose(predict_softmax_attn(params, h1, [(h0, x0)]), params["w_o"] @ values, atol=1e-12)
    assert not predict_softmax_attn(params, h1, []).any()


def test_softmax_identical_keys_split_evenly():
    """Test two identical keys receive weight 0.5 each"""
    params = _softmax_params(4, heads=1, seed=8)
    h = np.array([0.5, -0.5, 0.5, 0.5])
    x = np.array([1.0, 0.0, -1.0, 2.0])
    weights = attention_weights(params, np.ones(4), [(h, x), (h.copy(), x.copy())])
    np.testing.assert_allclose(weights, [[0.5, 0.5]])


def test_softmax_weights_sum_to_one():
    """Test normalisation at every position on random input"""
    params = _softmax_params(8, heads=2, seed=9)
    rng = np.random.default_rng(10)
    history = [(rng.standard_normal(8), rng.standard_normal(8)) for _ in range(12)]
    for t in range(1, 12):
        weights = attention_weights(params, rng.standard_normal(8), history[:t])
        np.testing.assert_allclose(weights.sum(axis=-1), np.ones(2), atol=1e-12)
        assert np.all(weights >= 0)


def test_softmax_sequence_form_matches_step_form():
    """Test the causal sequence form against the key/value cache"""
    config = tiny_config(PredictorKind.SOFTMAX_ATTENTION)
    model = tiny_model(config, seed=11)
    block = model.blocks[1]
    rng = np.random.default_rng(11)
    hs = normalize_trace(rng.standard_normal((15, 8)))[0]
    xs = rng.standard_normal((15, 8))
    seq, cache = PredictorHead(config).forward(block, hs[None], xs[None])
    state = SoftmaxAttentionState(block.predictor)
    for t in range(15):
        np.testing.assert_allclose(seq[0, t], state.predict(hs[t]), atol=1e-12)
        state.push(hs[t], xs[t])
    np.testing.assert_allclose(cache["attn"][0, :, 1:].sum(axis=-1), 1.0, atol=1e-12)
    assert not cache["attn"][0, :, 0].any()


def test_softmax_keys_read_past_inputs():
    """Test a past block input moves the output only at later positions"""
    params = _softmax_params(4, heads=2, seed=14)
    rng = np.random.default_rng(15)
    h0, h1, h2 = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(4)
    x0, x1 = rng.standard_normal(4), rng.standard_normal(4)
    base = predict_softmax_attn(params, h2, [(h0, x0), (h1, x1)])
    moved = predict_softmax_attn(params, h2, [(h0, x0 + 3.0), (h1, x1)])
    assert not np.allclose(base, moved)

    config = tiny_config(PredictorKind.SOFTMAX_ATTENTION)
    block = tiny_model(config, seed=16).blocks[0]
    hs = normalize_trace(rng.standard_normal((10, 8)))[0]
    xs = rng.standard_normal((10, 8))
    shifted = xs.copy()
    shifted[3] += 2.0
    seq, _ = PredictorHead(config).forward(block, hs[None], xs[None])
    seq_shifted, _ = PredictorHead(config).forward(block, hs[None], shifted[None])
    np.testing.assert_allclose(seq[0, :4], seq_shifted[0, :4], atol=1e-12)
    assert not np.allclose(seq[0, 4:], seq_shifted[0, 4:])


def test_projected_static_uses_frozen_projection():
    """Test the projected head reads P h_bar through a d/4 bottleneck"""
    config = tiny_config(PredictorKind.PROJECTED_STATIC)
    model = tiny_model(config, seed=12)
    block = model.blocks[0]
    assert block.buffers["proj"].shape == (2, 8)
    assert block.w_pred.shape == (8, 2)
    h = normalize_trace(np.arange(1.0, 9.0))[0]
    state = PredictorHead(config).new_state(block)
    np.testing.assert_allclose(state.predict(h), block.w_pred @ (block.buffers["proj"] @ h), atol=1e-12)
    assert not any("proj" in name for name in model.named_parameters())


@pytest.mark.parametrize("kind", list(PredictorKind), ids=lambda kind: kind.value)
def test_zero_trace_predicts_zero(kind):
    """Test every head outputs zero on an all-zero trace history"""
    config = tiny_config(kind)
    model = tiny_model(config, seed=13)
    x_hat, _ = PredictorHead(config).forward(model.blocks[0], np.zeros((1, 6, 8)), np.ones((1, 6, 8)))
    assert not x_hat.any()
