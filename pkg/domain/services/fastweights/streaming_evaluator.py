#!/usr/bin/env python3
"""
🌊 STREAMING EVALUATOR
=====================
Streams named token sequences through a trained model with and without fast
weights and reports:

- windowed perplexity curves per (domain, config)
- the sweep table: mean PPL per domain and change against the no-PGHU arm
- trace warmup: first vs last window with frozen weights
- stability envelope at a tiny learning rate
- position flatness of the in-distribution curve
- uncertainty AUROC, out-of-distribution as the positive class

Domain-Driven Design: Domain service composing spen inference and the
fast-weight adapter.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from domain.entities.fast_weights import (
    AUROC_REFERENCE,
    STABILITY_ETA,
    SWEEP_REFERENCE,
    WARMUP_REFERENCE,
    FastWeightConfig,
    SweepConfig,
)
from domain.entities.spen_model import SpenModel
from domain.services.fastweights.fast_weight_adapter import FastWeightAdapter, auroc
from domain.services.spen.inference import StreamResult, perplexity_stream


def position_flatness(curve: Sequence[float], n_bins: int = 10) -> float:
    """
    Spearman rho between bin index and mean PPL of `n_bins` consecutive bins
    of the window curve. Needs at least `n_bins` windows.
    """
    values = np.asarray(curve, dtype=np.float64)
    if n_bins < 2:
        raise ValueError("position flatness needs at least two bins")
    if values.size < n_bins:
        raise ValueError(f"{values.size} windows cannot fill {n_bins} bins")
    binned = [chunk.mean() for chunk in np.array_split(values, n_bins)]
    rho = pd.Series(np.arange(n_bins, dtype=np.float64)).corr(pd.Series(binned), method="spearman")
    return 0.0 if np.isnan(rho) else float(rho)


def _pct(value: float, baseline: float) -> float:
    return 100.0 * (value - baseline) / baseline


@dataclass
class StreamingReport:
    curves: List[Dict[str, Any]] = field(default_factory=list)
    sweep: List[Dict[str, Any]] = field(default_factory=list)
    warmup: List[Dict[str, Any]] = field(default_factory=list)
    stability: Dict[str, Any] = field(default_factory=dict)
    flatness: Optional[float] = None
    uncertainty_auroc: Dict[str, float] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)

    def curves_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.curves, columns=["domain", "config", "window_idx", "ppl"])

    def sweep_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.sweep)

    def warmup_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.warmup, columns=["domain", "start_ppl", "end_ppl", "change_pct"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "sweep": self.sweep,
            "warmup": self.warmup,
            "stability_envelope": self.stability,
            "position_flatness_rho": self.flatness,
            "uncertainty_auroc": self.uncertainty_auroc,
            "reference": {
                "sweep": SWEEP_REFERENCE,
                "warmup": WARMUP_REFERENCE,
                "uncertainty_auroc": AUROC_REFERENCE,
            },
        }


class StreamingEvaluator:
    """
    🌊 Sweep of fast-weight arms over named domain streams
    """

    def __init__(self, model: SpenModel, sweep: Optional[SweepConfig] = None):
        self.model = model
        self.sweep = sweep or SweepConfig()
        self.logger = logging.getLogger(__name__)

    def stream(self, tokens: Sequence[int], arm: FastWeightConfig) -> tuple:
        """(StreamResult, max delta norm) for one arm on one stream"""
        adapter = FastWeightAdapter(self.model, arm)
        result = perplexity_stream(self.model, tokens, self.sweep.window, adapter=adapter)
        return result, adapter.max_delta_norm

    def plain(self, tokens: Sequence[int]) -> StreamResult:
        return perplexity_stream(self.model, tokens, self.sweep.window)

    def evaluate(self, domains: Dict[str, Sequence[int]]) -> StreamingReport:
        if self.sweep.in_distribution not in domains:
            raise ValueError(f"domains must include the in-distribution stream {self.sweep.in_distribution!r}")
        report = StreamingReport(config=self.sweep.to_dict())
        baseline_ppl: Dict[str, float] = {}
        results: Dict[str, Dict[str, StreamResult]] = {}

        for arm in self.sweep.arms():
            row: Dict[str, Any] = {"config": arm.label, "eta": arm.eta, "pi_max": arm.pi_max}
            for domain, tokens in domains.items():
                self.logger.info(f"🌊 Streaming {domain} with {arm.label}")
                result, max_delta = self.stream(tokens, arm)
                results.setdefault(domain, {})[arm.label] = result
                mean_ppl = float(np.mean(result.window_ppl))
                row[domain] = mean_ppl
                row[f"{domain}_max_delta_norm"] = max_delta
                report.curves.extend(
                    {"domain": domain, "config": arm.label, "window_idx": i, "ppl": ppl}
                    for i, ppl in enumerate(result.window_ppl)
                )
                if arm.eta == 0:
                    baseline_ppl[domain] = mean_ppl
            report.sweep.append(row)

        for row in report.sweep:
            for domain in domains:
                row[f"{domain}_delta_pct"] = _pct(row[domain], baseline_ppl[domain]) if row["eta"] else None

        baseline_label = self.sweep.baseline().label
        for domain in domains:
            result = results[domain][baseline_label]
            report.warmup.append({
                "domain": domain,
                "start_ppl": result.start_ppl,
                "end_ppl": result.end_ppl,
                "change_pct": result.change_pct,
            })

        in_dist = domains[self.sweep.in_distribution]
        report.stability = self.stability_envelope(in_dist, baseline_ppl[self.sweep.in_distribution])
        curve = results[self.sweep.in_distribution][baseline_label].window_ppl
        if len(curve) >= self.sweep.flatness_bins:
            report.flatness = position_flatness(curve, self.sweep.flatness_bins)
        else:
            self.logger.warning(f"⚠️ {len(curve)} windows are too few for position flatness")

        for domain, tokens in domains.items():
            if domain == self.sweep.in_distribution:
                continue
            report.uncertainty_auroc[domain] = self.uncertainty_auroc(in_dist, tokens)

        self.logger.info(f"📊 Sweep finished: {len(report.sweep)} arms x {len(domains)} domains")
        return report

    def stability_envelope(self, tokens: Sequence[int], baseline_ppl: float) -> Dict[str, Any]:
        arm = FastWeightConfig(eta=STABILITY_ETA, pi_max=1.0)
        result, max_delta = self.stream(tokens, arm)
        ppl = float(np.mean(result.window_ppl))
        change = _pct(ppl, baseline_ppl)
        self.logger.info(f"📊 Stability envelope (eta={STABILITY_ETA:g}): {change:+.3f}% in-distribution")
        return {"eta": STABILITY_ETA, "pi_max": 1.0, "ppl": ppl, "baseline_ppl": baseline_ppl,
                "change_pct": change, "max_delta_norm": max_delta}

    def uncertainty_auroc(self, id_tokens: Sequence[int], ood_tokens: Sequence[int]) -> float:
        """U_t collected per token with precision tracking only (eta = 0)"""
        arm = FastWeightConfig(eta=0.0, pi_max=10.0)
        id_result, _ = self.stream(id_tokens, arm)
        ood_result, _ = self.stream(ood_tokens, arm)
        return auroc(id_result.uncertainty, ood_result.uncertainty)


def streaming_eval(model: SpenModel, domains: Dict[str, Sequence[int]],
                   sweep: Optional[SweepConfig] = None) -> StreamingReport:
    return StreamingEvaluator(model, sweep).evaluate(domains)
