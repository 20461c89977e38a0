"""Fitness scoring: RMSE objective, MAE metric, and variable biasing.

Scores are computed on residuals in original physical units: when the
dataset was standardized, predictions and actuals are mapped back through
the inverse affine transform before the error is taken.  Invalid mappings,
mode violations, and non-finite evaluations all score +infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Set

import numpy as np

from . import expr as xp
from .dataset import SeriesEvaluator, StandardizationParams, TimeSeriesDataset, WindowSpec
from .errors import ComputeError

INVALID_FITNESS = math.inf


def rmse(errors) -> float:
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("rmse of an empty sequence")
    with np.errstate(over="ignore"):  # huge residuals legitimately score +inf
        return float(np.sqrt(np.mean(np.square(errors))))


def mae(errors) -> float:
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("mae of an empty sequence")
    return float(np.mean(np.abs(errors)))


@dataclass
class BiasPolicy:
    """Multiplicative penalty for expressions missing required variables.

    Each group is a set of identifiers; one penalty factor is applied per
    group with no member present in the expression.
    """

    required_groups: List[Set[str]] = field(default_factory=list)
    penalty_factor: float = 2.0

    def __post_init__(self):
        if self.penalty_factor <= 1.0:
            raise ValueError("penalty factor must be > 1")

    def penalty(self, names: Set[str]) -> float:
        factor = 1.0
        for group in self.required_groups:
            if not (set(group) & names):
                factor *= self.penalty_factor
        return factor


def residuals_in_original_units(
    predictions: np.ndarray,
    actuals: np.ndarray,
    target: str,
    params: Optional[StandardizationParams],
) -> np.ndarray:
    if params is None or target not in params.bounds:
        return predictions - actuals
    # affine map: residual scales by the column range
    return (predictions - actuals) * params.scale(target)


def score(
    e: xp.Node,
    ds: TimeSeriesDataset,
    spec: WindowSpec,
    bias: Optional[BiasPolicy] = None,
    target_params: Optional[StandardizationParams] = None,
    evaluator: Optional[SeriesEvaluator] = None,
) -> float:
    """RMSE of an expression over the split, biased and de-standardized."""
    ev = evaluator if evaluator is not None else SeriesEvaluator(ds, spec)
    try:
        preds = ev.predictions(e)
    except ComputeError:
        return INVALID_FITNESS
    if preds is None:
        return INVALID_FITNESS
    res = residuals_in_original_units(preds, ev.target[ev.times], spec.target, target_params)
    value = rmse(res)
    if bias is not None:
        value *= bias.penalty(xp.variable_names(e))
    return value
