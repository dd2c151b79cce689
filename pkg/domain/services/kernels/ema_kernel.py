#!/usr/bin/env python3
"""
🔁 EMA KERNEL
============
The EMA recurrence h_t = (1 - alpha) * h_{t-1} + alpha * x_t as a scan primitive:

- `ema_sequential`: reference loop over time
- `ema_chunked`: chunk-local prefixes plus a carry scan over the (scale, offset)
  monoid, optionally spread across thread lanes
- `ema_reverse`: the adjoint scan used by hand-written backward passes
- steady-state analytics and a throughput benchmark

Time is always axis 0; trailing axes are carried along unchanged.

Domain-Driven Design: Domain service shared by the Hebbian hierarchy and SPEN.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from domain.entities.scan import BenchReport, CombineMode, ScanConfig, ScanPrecision, validate_alpha

logger = logging.getLogger(__name__)

Carry = Tuple[Union[float, np.ndarray], np.ndarray]


def _as_float(x: np.ndarray, dtype: Optional[np.dtype] = None) -> np.ndarray:
    x = np.asarray(x)
    if dtype is not None:
        return x.astype(dtype, copy=False)
    if x.dtype not in (np.float32, np.float64):
        return x.astype(np.float64)
    return x


def _initial_state(x: np.ndarray, h0: Optional[np.ndarray]) -> np.ndarray:
    if h0 is None:
        return np.zeros(x.shape[1:], dtype=x.dtype)
    h0 = np.asarray(h0, dtype=x.dtype)
    if h0.shape != x.shape[1:]:
        raise ValueError(f"h0 shape {h0.shape} does not match state shape {x.shape[1:]}")
    return h0


def ema_sequential(x: np.ndarray, alpha: float, h0: Optional[np.ndarray] = None) -> np.ndarray:
    """Reference EMA over axis 0; returns h_1..h_T"""
    alpha = validate_alpha(alpha)
    x = _as_float(x)
    h = _initial_state(x, h0)
    a = x.dtype.type(alpha)
    keep = x.dtype.type(1.0) - a
    out = np.empty_like(x)
    for t in range(x.shape[0]):
        h = keep * h + a * x[t]
        out[t] = h
    return out


def combine(c1: Carry, c2: Carry) -> Carry:
    """Compose carry c1 followed by carry c2: (s2*s1, s2*o1 + o2)"""
    s1, o1 = c1
    s2, o2 = c2
    return s2 * s1, s2 * o1 + o2


def scan_carries(carries: Sequence[Carry], mode: CombineMode = CombineMode.SEQUENTIAL) -> List[Carry]:
    """Inclusive prefix over chunk carries"""
    mode = CombineMode(mode)
    if not carries:
        return []
    if mode is CombineMode.SEQUENTIAL:
        prefix = [carries[0]]
        for carry in carries[1:]:
            prefix.append(combine(prefix[-1], carry))
        return prefix

    # Hillis-Steele: after the pass with stride s, slot i holds the product of
    # carries (i - 2s, i].
    prefix = list(carries)
    stride = 1
    while stride < len(prefix):
        prefix = [
            prefix[i] if i < stride else combine(prefix[i - stride], prefix[i])
            for i in range(len(prefix))
        ]
        stride *= 2
    return prefix


def _local_prefixes(x_chunks: np.ndarray, start: np.ndarray, keep, a) -> np.ndarray:
    """Chunk-local EMA for a block of chunks, vectorised over chunks"""
    out = np.empty_like(x_chunks)
    h = start
    for j in range(x_chunks.shape[1]):
        h = keep * h + a * x_chunks[:, j]
        out[:, j] = h
    return out


def ema_chunked(x: np.ndarray,
                alpha: float,
                h0: Optional[np.ndarray] = None,
                config: Optional[ScanConfig] = None) -> np.ndarray:
    """
    Chunked-parallel EMA.

    Chunk 0 starts from h0 and every other chunk from zero; chunk c > 0 is then
    corrected by (1 - alpha)^(j+1) times the state leaving chunk c - 1. With
    chunk_len >= T this performs exactly the operations of `ema_sequential`.
    """
    config = config or ScanConfig()
    alpha = validate_alpha(alpha)
    x = _as_float(x, config.precision.dtype)
    T = x.shape[0]
    if T == 0:
        return np.empty_like(x)

    L = min(int(config.chunk_len), T)
    n_chunks = -(-T // L)
    rest = x.shape[1:]
    padded = np.zeros((n_chunks * L,) + rest, dtype=x.dtype)
    padded[:T] = x
    chunks = padded.reshape((n_chunks, L) + rest)

    a = x.dtype.type(alpha)
    keep = x.dtype.type(1.0) - a
    start = np.zeros((n_chunks,) + rest, dtype=x.dtype)
    start[0] = _initial_state(x, h0)

    lanes = max(1, min(int(config.lanes), n_chunks))
    if lanes == 1:
        local = _local_prefixes(chunks, start, keep, a)
    else:
        bounds = np.linspace(0, n_chunks, lanes + 1).astype(int)
        with ThreadPoolExecutor(max_workers=lanes) as pool:
            parts = list(pool.map(
                lambda ij: _local_prefixes(chunks[ij[0]:ij[1]], start[ij[0]:ij[1]], keep, a),
                [(int(i), int(j)) for i, j in zip(bounds[:-1], bounds[1:]) if j > i],
            ))
        local = np.concatenate(parts, axis=0)

    if n_chunks > 1:
        chunk_scale = keep ** L
        carries = [(chunk_scale, local[c, L - 1]) for c in range(n_chunks)]
        prefix = scan_carries(carries, config.combine)
        powers = keep ** np.arange(1, L + 1, dtype=x.dtype)
        powers = powers.reshape((L,) + (1,) * len(rest))
        for c in range(1, n_chunks):
            local[c] = local[c] + powers * prefix[c - 1][1]

    return local.reshape((n_chunks * L,) + rest)[:T]


def ema(x: np.ndarray, alpha: float, h0: Optional[np.ndarray] = None,
        config: Optional[ScanConfig] = None) -> np.ndarray:
    """Chunked scan when a config is given, sequential reference otherwise"""
    if config is None:
        return ema_sequential(x, alpha, h0)
    return ema_chunked(x, alpha, h0, config)


def ema_reverse(g: np.ndarray, alpha: float, config: Optional[ScanConfig] = None) -> np.ndarray:
    """
    Adjoint of the EMA with respect to its inputs:
    dx_t = alpha * sum_{s >= t} (1 - alpha)^(s - t) * g_s
    """
    g = _as_float(g)
    if config is not None:
        config = ScanConfig(chunk_len=config.chunk_len,
                            precision=ScanPrecision.FP64 if g.dtype == np.float64 else ScanPrecision.FP32,
                            lanes=config.lanes,
                            combine=config.combine)
    return ema(g[::-1], alpha, None, config)[::-1].copy()


def trace_trajectory(x: np.ndarray, alpha: float, h0: Optional[np.ndarray] = None) -> np.ndarray:
    """(T + 1) rows: h0 followed by h_1..h_T"""
    x = _as_float(x)
    start = _initial_state(x, h0)
    return np.concatenate([start[None], ema_sequential(x, alpha, start)], axis=0)


def analytic_gap(alpha: float, t: int) -> float:
    """Residual factor (1 - alpha)^t of a zero-initialised trace under stationarity"""
    alpha = validate_alpha(alpha)
    return (1.0 - alpha) ** t


def steady_state_gap(h: np.ndarray, target_mean: np.ndarray, alpha: float, t: Optional[int] = None) -> float:
    """
    ||h_t - mean|| / ||mean||.

    `h` is either a single state or a trajectory from `trace_trajectory`, in
    which case row `t` is used.
    """
    validate_alpha(alpha)
    target_mean = np.asarray(target_mean, dtype=np.float64)
    norm = float(np.linalg.norm(target_mean))
    if norm == 0.0:
        raise ValueError("target mean has zero norm")
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == target_mean.ndim + 1:
        if t is None:
            raise ValueError("t is required when h is a trajectory")
        h = h[t]
    return float(np.linalg.norm(h - target_mean) / norm)


def bench_scan(T: int, d: int, chunk_len: int, repeats: int, lanes: int = 4, alpha: float = 0.02,
               seed: int = 0) -> BenchReport:
    """Tokens per second for the sequential and chunked scans on random fp32 input"""
    for name, value in (("T", T), ("d", d), ("chunk_len", chunk_len), ("repeats", repeats), ("lanes", lanes)):
        if int(value) < 1:
            raise ValueError(f"{name} must be positive, got {value}")

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((T, d)).astype(np.float32)
    config = ScanConfig(chunk_len=chunk_len, lanes=lanes)

    seq_times: List[float] = []
    chunk_times: List[float] = []
    reference = chunked = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        reference = ema_sequential(x, alpha)
        seq_times.append(time.perf_counter() - t0)

        t0 = time.perf_counter()
        chunked = ema_chunked(x, alpha, None, config)
        chunk_times.append(time.perf_counter() - t0)

    deviation = float(np.max(np.abs(reference - chunked)))
    report = BenchReport(
        T=T, d=d, chunk_len=chunk_len, lanes=lanes, repeats=repeats,
        tok_per_s_seq=T / max(min(seq_times), 1e-12),
        tok_per_s_chunked=T / max(min(chunk_times), 1e-12),
        max_abs_dev=deviation,
    )
    logger.info(
        f"📊 Scan bench T={T} d={d} chunk={chunk_len} lanes={lanes}: "
        f"{report.tok_per_s_seq:,.0f} tok/s sequential, {report.tok_per_s_chunked:,.0f} tok/s chunked "
        f"({report.speedup:.2f}x), max dev {deviation:.2e}"
    )
    return report
