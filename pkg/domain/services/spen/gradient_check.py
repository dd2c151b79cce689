#!/usr/bin/env python3
"""
🔬 GRADIENT CHECK
================
Central finite differences against the hand-derived backward. Run it in
float64 with ste_mode="masked": that is the true derivative of the forward
pass wherever the top-k selection is locally constant. Probe points where any
selection flips under ±eps are skipped.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from domain.entities.spen_model import SpenModel
from domain.services.spen.model import forward_pass, loss_and_grads
from domain.services.spen.ops import cross_entropy

logger = logging.getLogger(__name__)


@dataclass
class GradientCheckReport:
    max_rel_error: Dict[str, float] = field(default_factory=dict)
    checked: Dict[str, int] = field(default_factory=dict)
    skipped: int = 0

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    def passed(self, tolerance: float = 1e-3) -> bool:
        return self.worst <= tolerance

    def failures(self, tolerance: float = 1e-3) -> List[str]:
        return sorted(name for name, err in self.max_rel_error.items() if err > tolerance)


def _loss_and_masks(model: SpenModel, inputs: np.ndarray, targets: np.ndarray,
                    head_weight: Optional[np.ndarray]) -> tuple:
    logits, fc = forward_pass(model, inputs, train=True, head_weight=head_weight)
    ce, _, _ = cross_entropy(logits, np.atleast_2d(targets))
    lb = float(np.mean([cache["lb"] for cache in fc["blocks"]]))
    masks = [cache["mask"] for cache in fc["blocks"]]
    return ce + model.config.lb_weight * lb, masks


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    """|a - n| / max(|a|, |n|, floor); the floor keeps round-off on near-zero entries from counting"""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_gradients(model: SpenModel,
                    inputs: np.ndarray,
                    targets: np.ndarray,
                    eps: float = 1e-6,
                    max_entries: Optional[int] = None,
                    seed: int = 0,
                    head_weight: Optional[np.ndarray] = None) -> GradientCheckReport:
    """
    Compare every parameter entry (or `max_entries` random entries per
    parameter) with a central difference of the total loss.
    """
    if model.dtype != np.float64:
        logger.warning("⚠️ Gradient check on a non-float64 model; expect loose agreement")
    _, grads = loss_and_grads(model, inputs, targets, head_weight=head_weight)
    _, base_masks = _loss_and_masks(model, inputs, targets, head_weight)
    params = model.named_parameters()
    if head_weight is not None:
        params["head"] = head_weight
    rng = np.random.default_rng(seed)
    report = GradientCheckReport()

    for name, param in params.items():
        flat = param.reshape(-1)
        analytic = grads[name].reshape(-1)
        indices = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            indices = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        worst, count = 0.0, 0
        for i in indices:
            original = flat[i]
            flat[i] = original + eps
            plus, masks_plus = _loss_and_masks(model, inputs, targets, head_weight)
            flat[i] = original - eps
            minus, masks_minus = _loss_and_masks(model, inputs, targets, head_weight)
            flat[i] = original
            stable = all(np.array_equal(a, b) and np.array_equal(a, c)
                         for a, b, c in zip(base_masks, masks_plus, masks_minus))
            if not stable:
                report.skipped += 1
                continue
            numeric = (plus - minus) / (2.0 * eps)
            worst = max(worst, relative_error(float(analytic[i]), numeric))
            count += 1
        report.max_rel_error[name] = worst
        report.checked[name] = count

    logger.info(f"📊 Gradient check: worst relative error {report.worst:.2e}, "
                f"{report.skipped} probe points skipped")
    return report
