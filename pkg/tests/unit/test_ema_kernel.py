#!/usr/bin/env python3
"""
🧪 TEST SCRIPT FOR THE EMA KERNEL
================================
Chunked scan against the sequential reference, the reverse (adjoint) scan and
the steady-state analytics.
"""

import numpy as np
import pytest

from domain.entities.scan import CombineMode, DecaySpec, ScanConfig, ScanPrecision, TraceState
from domain.services.kernels.ema_kernel import (
    analytic_gap,
    bench_scan,
    combine,
    ema,
    ema_chunked,
    ema_reverse,
    ema_sequential,
    scan_carries,
    steady_state_gap,
    trace_trajectory,
)


def _signal(T, d, seed=0, dtype=np.float64):
    return np.random.default_rng(seed).standard_normal((T, d)).astype(dtype)


def test_sequential_matches_hand_recurrence():
    """Test the reference loop on a scalar stream"""
    x = np.array([[1.0], [0.0], [2.0]])
    h = ema_sequential(x, 0.5)
    assert h[:, 0].tolist() == [0.5, 0.25, 1.125]


def test_sequential_uses_initial_state():
    """Test h0 enters with weight (1 - alpha)"""
    x = np.zeros((2, 3))
    h = ema_sequential(x, 0.25, h0=np.ones(3))
    np.testing.assert_allclose(h[0], 0.75 * np.ones(3))
    np.testing.assert_allclose(h[1], 0.5625 * np.ones(3))


@pytest.mark.parametrize("T,L", [(1000, 128), (513, 64), (7, 3), (64, 1)])
def test_chunked_fp64_matches_sequential(T, L):
    """Test chunked fp64 scan within 1e-12 of the reference"""
    x = _signal(T, 5, seed=T)
    h0 = np.random.default_rng(1).standard_normal(5)
    ref = ema_sequential(x, 0.02, h0)
    out = ema_chunked(x, 0.02, h0, ScanConfig(chunk_len=L, precision=ScanPrecision.FP64))
    assert np.max(np.abs(out - ref)) <= 1e-12


def test_chunked_fp32_matches_sequential():
    """Test chunked fp32 scan within 1e-5 of the fp64 reference"""
    x = _signal(4096, 16, seed=3)
    ref = ema_sequential(x, 0.003)
    out = ema_chunked(x, 0.003, config=ScanConfig(chunk_len=128))
    assert out.dtype == np.float32
    assert np.max(np.abs(out.astype(np.float64) - ref)) <= 1e-5


def test_single_chunk_is_bitwise_sequential():
    """Test chunk_len >= T performs exactly the sequential operations"""
    x = _signal(200, 8, seed=5, dtype=np.float32)
    ref = ema_sequential(x, 0.15)
    out = ema_chunked(x, 0.15, config=ScanConfig(chunk_len=512))
    assert np.array_equal(out, ref)


def test_lanes_do_not_change_result():
    """Test the thread-lane split leaves the output bitwise unchanged"""
    x = _signal(1000, 4, seed=7)
    config = ScanConfig(chunk_len=50, precision=ScanPrecision.FP64)
    one = ema_chunked(x, 0.1, config=config)
    four = ema_chunked(x, 0.1, config=ScanConfig(chunk_len=50, precision=ScanPrecision.FP64, lanes=4))
    assert np.array_equal(one, four)


def test_tree_combine_matches_sequential_combine():
    """Test the Hillis-Steele carry scan against the left fold"""
    rng = np.random.default_rng(11)
    carries = [(0.9 ** (i + 1), rng.standard_normal(3)) for i in range(13)]
    seq = scan_carries(carries, CombineMode.SEQUENTIAL)
    tree = scan_carries(carries, CombineMode.TREE)
    for (s1, o1), (s2, o2) in zip(seq, tree):
        assert s1 == pytest.approx(s2, rel=1e-12)
        np.testing.assert_allclose(o1, o2, rtol=1e-12, atol=1e-12)


def test_combine_is_associative():
    """Test ((a.b).c) == (a.(b.c)) on scalar carries"""
    a, b, c = (0.5, np.array([1.0])), (0.25, np.array([2.0])), (0.8, np.array([-1.0]))
    left = combine(combine(a, b), c)
    right = combine(a, combine(b, c))
    assert left[0] == pytest.approx(right[0])
    np.testing.assert_allclose(left[1], right[1])


def test_tree_mode_chunked_scan():
    """Test the chunked scan with tree-combined carries"""
    x = _signal(300, 2, seed=13)
    config = ScanConfig(chunk_len=16, precision=ScanPrecision.FP64, combine=CombineMode.TREE)
    np.testing.assert_allclose(ema_chunked(x, 0.3, config=config), ema_sequential(x, 0.3), atol=1e-12)


def test_chunked_scan_is_linear():
    """Test EMA(a x + b y) == a EMA(x) + b EMA(y) for the chunked scan"""
    config = ScanConfig(chunk_len=32, precision=ScanPrecision.FP64)
    x, y = _signal(500, 3, seed=21), _signal(500, 3, seed=22)
    mixed = ema_chunked(2.5 * x - 0.75 * y, 0.05, config=config)
    split = 2.5 * ema_chunked(x, 0.05, config=config) - 0.75 * ema_chunked(y, 0.05, config=config)
    np.testing.assert_allclose(mixed, split, atol=1e-12)
    np.testing.assert_allclose(mixed, ema_sequential(2.5 * x - 0.75 * y, 0.05), atol=1e-12)


@pytest.mark.parametrize("k", [1, 17, 64])
def test_delayed_input_delays_the_trace(k):
    """Test prepending k zeros shifts the output by k steps from a zero state"""
    config = ScanConfig(chunk_len=16, precision=ScanPrecision.FP64)
    x = _signal(300, 4, seed=23)
    delayed = np.concatenate([np.zeros((k, 4)), x], axis=0)
    out = ema_chunked(delayed, 0.1, config=config)
    assert not out[:k].any()
    np.testing.assert_allclose(out[k:], ema_chunked(x, 0.1, config=config), atol=1e-12)
    np.testing.assert_allclose(out[k:], ema_sequential(x, 0.1), atol=1e-12)


def test_empty_sequence():
    """Test T = 0 returns an empty array"""
    out = ema_chunked(np.zeros((0, 4)), 0.5, config=ScanConfig(chunk_len=4))
    assert out.shape == (0, 4)


def test_ema_dispatches_on_config():
    """Test ema() picks the reference loop without a config"""
    x = _signal(20, 2)
    assert np.array_equal(ema(x, 0.2), ema_sequential(x, 0.2))


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5, float("nan")])
def test_invalid_alpha_rejected(alpha):
    """Test alpha outside (0, 1] is refused"""
    with pytest.raises(ValueError):
        ema_sequential(np.zeros((3, 1)), alpha)


def test_h0_shape_checked():
    """Test a mismatched initial state is refused"""
    with pytest.raises(ValueError):
        ema_sequential(np.zeros((3, 2)), 0.5, h0=np.zeros(3))


def test_reverse_scan_matches_brute_force():
    """Test the adjoint scan against the explicit double sum"""
    g = _signal(40, 3, seed=17)
    alpha = 0.2
    expected = np.zeros_like(g)
    for t in range(40):
        for s in range(t, 40):
            expected[t] += alpha * (1 - alpha) ** (s - t) * g[s]
    np.testing.assert_allclose(ema_reverse(g, alpha), expected, atol=1e-12)
    chunked = ema_reverse(g, alpha, ScanConfig(chunk_len=7))
    np.testing.assert_allclose(chunked, expected, atol=1e-12)


def test_reverse_scan_is_the_adjoint():
    """Test <ema(x), g> == <x, ema_reverse(g)>"""
    x = _signal(50, 2, seed=19)
    g = _signal(50, 2, seed=23)
    lhs = float(np.sum(ema_sequential(x, 0.05) * g))
    rhs = float(np.sum(x * ema_reverse(g, 0.05)))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_trace_trajectory_prepends_initial_state():
    """Test the trajectory has T + 1 rows starting at h0"""
    traj = trace_trajectory(np.ones((5, 2)), 0.5, h0=np.full(2, 3.0))
    assert traj.shape == (6, 2)
    np.testing.assert_allclose(traj[0], [3.0, 3.0])


def test_constant_input_gap_is_analytic():
    """Test a zero-initialised trace on a constant stream closes as (1 - alpha)^t"""
    mean = np.array([1.0, -2.0, 0.5])
    alpha = 0.02
    traj = trace_trajectory(np.tile(mean, (300, 1)), alpha)
    for t in (1, 50, 300):
        assert steady_state_gap(traj, mean, alpha, t) == pytest.approx(analytic_gap(alpha, t), rel=1e-9)


def test_steady_state_gap_needs_t_for_trajectories():
    """Test trajectories without t and zero means are refused"""
    with pytest.raises(ValueError):
        steady_state_gap(np.zeros((3, 2)), np.ones(2), 0.1)
    with pytest.raises(ValueError):
        steady_state_gap(np.zeros(2), np.zeros(2), 0.1)


def test_decay_spec_constants():
    """Test half-life, window and token weights"""
    decay = DecaySpec(0.5)
    assert decay.half_life == pytest.approx(1.0)
    assert decay.window == 2.0
    assert decay.token_weight(2) == pytest.approx(0.125)
    assert DecaySpec(1.0).half_life == 0.0


def test_trace_state_update_matches_scan():
    """Test the streaming state agrees with the batch scan"""
    x = _signal(30, 4, seed=29)
    state = TraceState.zeros(0.1, 4)
    for row in x:
        state.update(row)
    np.testing.assert_allclose(state.h, ema_sequential(x, 0.1)[-1], atol=1e-14)
    assert state.steps == 30
    state.reset()
    assert state.steps == 0 and not state.h.any()


def test_scan_config_validation():
    """Test chunk_len and lanes must be positive"""
    with pytest.raises(ValueError):
        ScanConfig(chunk_len=0)
    with pytest.raises(ValueError):
        ScanConfig(lanes=0)


def test_bench_scan_report():
    """Test the benchmark reports both throughputs and a small deviation"""
    report = bench_scan(T=256, d=8, chunk_len=32, repeats=1, lanes=2)
    data = report.to_dict()
    for key in ("tok_per_s_seq", "tok_per_s_chunked", "speedup", "max_abs_dev"):
        assert key in data
    assert report.tok_per_s_seq > 0
    assert report.max_abs_dev <= 1e-5
