#!/usr/bin/env python3
"""
📊 PROBE EVALUATOR
=================
Closed-form ridge probes over token representations, Wilson score intervals,
and the Gaussian random-projection control used to compare representations
at equal dimensionality.

Domain-Driven Design: Domain service; pure functions over immutable matrices.
"""

import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np
from sklearn.linear_model import Ridge

from domain.entities.grammar import ROLE_SET
from domain.entities.probe_report import (
    N_ROLES,
    ProbeDataset,
    ProbeReport,
    ProjectionResult,
    RidgeProbe,
    RoleScore,
)
from domain.exceptions import InvariantViolation

logger = logging.getLogger(__name__)

RIDGE_LAMBDA = 0.01


def augment(features: np.ndarray) -> np.ndarray:
    """float64 copy with a trailing column of ones"""
    features = np.asarray(features, dtype=np.float64)
    return np.hstack([features, np.ones((features.shape[0], 1))])


def fit_ridge(train: ProbeDataset, lam: float = RIDGE_LAMBDA) -> RidgeProbe:
    """W = Y^T X (X^T X + lam I)^-1 on the bias-augmented features"""
    if not np.all(np.isfinite(train.features)):
        raise ValueError("probe features contain non-finite values")
    x_aug = augment(train.features)
    targets = np.zeros((len(train), N_ROLES))
    targets[np.arange(len(train)), train.labels] = 1.0

    ridge = Ridge(alpha=lam, fit_intercept=False, solver="cholesky")
    ridge.fit(x_aug, targets)
    return RidgeProbe(weights=np.asarray(ridge.coef_, dtype=np.float64), lam=lam)


def predict(probe: RidgeProbe, features: np.ndarray) -> np.ndarray:
    """argmax over role scores; ties go to the lowest role id"""
    if features.shape[1] != probe.dim:
        raise ValueError(f"feature dim {features.shape[1]} does not match probe dim {probe.dim}")
    return np.argmax(augment(features) @ probe.weights.T, axis=1)


def wilson_ci(successes: int, trials: int, z: float = 1.96) -> tuple:
    """Wilson score interval for a binomial proportion"""
    if trials <= 0:
        raise ValueError("Wilson interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes={successes} outside [0, trials={trials}]")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return low, high


def _score(correct: np.ndarray) -> RoleScore:
    trials = int(correct.size)
    successes = int(correct.sum())
    low, high = wilson_ci(successes, trials)
    return RoleScore(accuracy=successes / trials, wilson_low=low, wilson_high=high, support=trials)


def per_role_scores(labels: np.ndarray, predictions: np.ndarray) -> Dict[str, RoleScore]:
    scores: Dict[str, RoleScore] = {}
    for role_id, role in enumerate(ROLE_SET):
        mask = labels == role_id
        if mask.any():
            scores[role] = _score(predictions[mask] == role_id)
    return scores


def _accuracy(correct: np.ndarray) -> float:
    return float(correct.mean()) if correct.size else float("nan")


def evaluate(probe: RidgeProbe,
             within: ProbeDataset,
             transfer: ProbeDataset,
             representation: str = "features") -> ProbeReport:
    """Token accuracy on both splits, deep-role accuracy and per-role Wilson rows"""
    for name, data in (("within", within), ("transfer", transfer)):
        if data.dim != probe.dim:
            raise ValueError(f"{name} features have dim {data.dim}, probe expects {probe.dim}")

    within_pred = predict(probe, within.features)
    transfer_pred = predict(probe, transfer.features)
    within_ok = within_pred == within.labels
    transfer_ok = transfer_pred == transfer.labels
    deep_ok = within_ok[within.deep] if within.deep is not None else np.array([], dtype=bool)
    deep_transfer_ok = transfer_ok[transfer.deep] if transfer.deep is not None else np.array([], dtype=bool)

    intervals = {}
    for name, correct in (("within", within_ok), ("transfer", transfer_ok),
                          ("deep", deep_ok), ("deep_transfer", deep_transfer_ok)):
        if correct.size:
            intervals[name] = wilson_ci(int(correct.sum()), int(correct.size))

    return ProbeReport(
        representation=representation,
        dim=probe.dim,
        per_role=per_role_scores(within.labels, within_pred),
        per_role_transfer=per_role_scores(transfer.labels, transfer_pred),
        within=_accuracy(within_ok),
        transfer=_accuracy(transfer_ok),
        deep=_accuracy(deep_ok),
        deep_transfer=_accuracy(deep_transfer_ok),
        intervals=intervals,
        n_parameters=probe.n_parameters,
    )


def projection_matrix(d_in: int, d_out: int, seed: int) -> np.ndarray:
    """d_out x d_in, entries N(0, 1/d_in)"""
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return rng.standard_normal((d_out, d_in)) / math.sqrt(d_in)


def random_projection(features: np.ndarray, d_out: int, seed: int,
                      matrix: Optional[np.ndarray] = None) -> np.ndarray:
    """features @ P^T; `matrix` overrides the random P"""
    if d_out < 1:
        raise ValueError(f"d_out must be >= 1, got {d_out}")
    features = np.asarray(features, dtype=np.float64)
    if matrix is None:
        matrix = projection_matrix(features.shape[1], d_out, seed)
    if matrix.shape != (d_out, features.shape[1]):
        raise ValueError(f"projection must be {d_out} x {features.shape[1]}, got {matrix.shape}")
    return features @ matrix.T


class ProbeEvaluator:
    """
    📊 Probe a representation and run its projection control
    """

    def __init__(self, lam: float = RIDGE_LAMBDA):
        self.lam = lam
        self.logger = logging.getLogger(__name__)

    def probe(self, name: str, train: ProbeDataset, within: ProbeDataset, transfer: ProbeDataset) -> ProbeReport:
        try:
            probe = fit_ridge(train, self.lam)
            report = evaluate(probe, within, transfer, representation=name)
        except Exception as e:
            self.logger.error(f"❌ Probe for {name} failed: {str(e)}")
            raise
        self.logger.info(
            f"📊 {name} (d={report.dim}): within {report.within:.3f}, "
            f"transfer {report.transfer:.3f}, deep {report.deep:.3f}"
        )
        return report

    def projection_control(self,
                           name: str,
                           train: ProbeDataset,
                           within: ProbeDataset,
                           transfer: ProbeDataset,
                           d_out: int,
                           seeds: Sequence[int]) -> ProjectionResult:
        """Project all three splits with the same P per seed; accuracies are averaged over seeds"""
        result = ProjectionResult(representation=name, d_out=d_out, within=[], transfer=[], deep=[],
                                  n_parameters=N_ROLES * (d_out + 1))
        for seed in seeds:
            matrix = projection_matrix(train.dim, d_out, seed)
            projected = [data.with_features(random_projection(data.features, d_out, seed, matrix))
                         for data in (train, within, transfer)]
            report = evaluate(fit_ridge(projected[0], self.lam), projected[1], projected[2],
                              representation=f"{name}@{d_out}")
            if report.n_parameters != result.n_parameters:
                raise InvariantViolation("projected probes must share their parameter count")
            result.within.append(report.within)
            result.transfer.append(report.transfer)
            result.deep.append(report.deep)
        self.logger.info(f"📊 {name}@{d_out} over {len(seeds)} seeds: within {result.mean_within:.3f}")
        return result
