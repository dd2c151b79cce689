"""
🔁 SCAN KERNELS
==============
EMA recurrence: sequential reference, chunked scan, adjoint scan, analytics.
"""

from .ema_kernel import (
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

__all__ = [
    "analytic_gap",
    "bench_scan",
    "combine",
    "ema",
    "ema_chunked",
    "ema_reverse",
    "ema_sequential",
    "scan_carries",
    "steady_state_gap",
    "trace_trajectory",
]
