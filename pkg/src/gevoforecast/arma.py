"""ARMA(p, q) baseline with automated order identification.

Estimation is Hannan-Rissanen two-stage least squares: a long autoregression
provides proxy residuals, then the autoregressive and moving-average
coefficients are fit jointly by regressing on lagged values and proxy
residuals.  Order identification scans a (p, q) grid and keeps the model
with the lowest final prediction error

    FPE = (1 + n/N) / (1 - n/N) * V,    n = p + q,

where N is the training length and V the population variance of the
in-sample residuals.  Multi-step forecasts substitute predicted values and
zero future innovations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import ComputeError, SingularRegressionError


@dataclass
class ArmaModel:
    p: int
    q: int
    ar: np.ndarray  # a_1 .. a_p
    ma: np.ndarray  # c_1 .. c_q
    variance: float  # population variance of in-sample residuals
    n_train: int
    mean: float

    @property
    def order_sum(self) -> int:
        return self.p + self.q


def _lagged_design(z: np.ndarray, lags: int, start: int) -> np.ndarray:
    return np.column_stack([z[start - i:len(z) - i] for i in range(1, lags + 1)])


def _lstsq(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if X.size == 0:
        return np.zeros(0)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularRegressionError("singular regression design")
    return coef


def fit(series, p: int, q: int) -> ArmaModel:
    """Two-stage least-squares fit of an ARMA(p, q) to a 1-D series."""
    y = np.asarray(series, dtype=np.float64)
    if p < 0 or q < 0 or (p == 0 and q == 0):
        raise ValueError("need p >= 1 or q >= 1 and non-negative orders")
    n = len(y)
    if n < 10 * (p + q + 1):
        raise ComputeError(f"series too short ({n}) for ARMA({p},{q})")
    if float(np.std(y)) == 0.0:
        raise SingularRegressionError("constant series")
    mean = float(np.mean(y))
    z = y - mean

    # stage one: long AR for proxy residuals
    long_order = max(p, q, min(20, n // 10))
    X1 = _lagged_design(z, long_order, long_order)
    alpha = _lstsq(X1, z[long_order:])
    resid_proxy = np.zeros(n)
    resid_proxy[long_order:] = z[long_order:] - X1 @ alpha

    # stage two: joint regression on lagged values and proxy residuals
    start = long_order + max(p, q)
    blocks = []
    if p:
        blocks.append(_lagged_design(z, p, start))
    if q:
        blocks.append(_lagged_design(resid_proxy, q, start))
    X2 = np.column_stack(blocks)
    target = z[start:]
    coef = _lstsq(X2, target)
    ar = coef[:p]
    ma = coef[p:]
    resid = target - X2 @ coef
    variance = float(np.mean(resid ** 2))
    return ArmaModel(p=p, q=q, ar=ar, ma=ma, variance=variance, n_train=n, mean=mean)


def fpe(model: ArmaModel) -> float:
    """Final prediction error of a fitted model."""
    n = model.order_sum
    N = model.n_train
    if N <= n:
        raise ValueError("training length must exceed the model order")
    return (1.0 + n / N) / (1.0 - n / N) * model.variance


@dataclass
class GridPoint:
    p: int
    q: int
    variance: float
    fpe: float


def identify(series, p_max: int = 10, q_max: int = 10) -> ArmaModel:
    """Fit the (p, q) grid and return the minimum-FPE model."""
    model, _ = identify_with_table(series, p_max, q_max)
    return model


def identify_with_table(series, p_max: int = 10, q_max: int = 10) -> Tuple[ArmaModel, List[GridPoint]]:
    best: Optional[ArmaModel] = None
    best_fpe = np.inf
    table: List[GridPoint] = []
    for p in range(0, p_max + 1):
        for q in range(0, q_max + 1):
            if p == 0 and q == 0:
                continue
            try:
                model = fit(series, p, q)
            except (ComputeError, SingularRegressionError):
                continue
            value = fpe(model)
            table.append(GridPoint(p, q, model.variance, value))
            if value < best_fpe:
                best, best_fpe = model, value
    if best is None:
        raise ComputeError("every grid point failed to fit")
    return best, table


def _in_sample_residuals(model: ArmaModel, z: np.ndarray) -> np.ndarray:
    """One-step residuals over a de-meaned series, zero during warm-up."""
    p, q = model.p, model.q
    warmup = max(p, q)
    e = np.zeros(len(z))
    for t in range(warmup, len(z)):
        pred = 0.0
        for i in range(1, p + 1):
            pred += model.ar[i - 1] * z[t - i]
        for j in range(1, q + 1):
            pred += model.ma[j - 1] * e[t - j]
        e[t] = z[t] - pred
    return e


def forecast(model: ArmaModel, history, steps: int) -> float:
    """Recursive multi-step forecast; returns the value ``steps`` ahead.

    Future innovations are zero; predicted values substitute unknown lags.
    ``steps == 0`` returns the last observed value.
    """
    y = np.asarray(history, dtype=np.float64)
    if len(y) < max(model.p, model.q):
        raise ComputeError("history shorter than the model order")
    if steps == 0:
        return float(y[-1])
    z = y - model.mean
    e = _in_sample_residuals(model, z)
    zbuf = list(z)
    ebuf = list(e)
    value = 0.0
    for _ in range(steps):
        value = 0.0
        for i in range(1, model.p + 1):
            value += model.ar[i - 1] * zbuf[-i]
        for j in range(1, model.q + 1):
            value += model.ma[j - 1] * ebuf[-j]
        zbuf.append(value)
        ebuf.append(0.0)
    return float(value + model.mean)


def rolling_forecast(model: ArmaModel, series, horizon: int, start: int):
    """Forecast ``horizon`` steps ahead from every base time >= ``start``.

    Residuals are filtered once over the whole series; per-base forecasting
    then reuses them.  Returns (target_times, predictions).
    """
    y = np.asarray(series, dtype=np.float64)
    z = y - model.mean
    e = _in_sample_residuals(model, z)
    p, q = model.p, model.q
    start = max(start, max(p, q))
    bases = range(start, len(y) - horizon)
    preds = np.empty(len(bases))
    for idx, k in enumerate(bases):
        zbuf = list(z[max(0, k + 1 - (p + horizon)):k + 1])
        ebuf = list(e[max(0, k + 1 - (q + horizon)):k + 1])
        value = 0.0
        for _ in range(horizon):
            value = 0.0
            for i in range(1, p + 1):
                value += model.ar[i - 1] * zbuf[-i]
            for j in range(1, q + 1):
                value += model.ma[j - 1] * ebuf[-j]
            zbuf.append(value)
            ebuf.append(0.0)
        preds[idx] = value + model.mean
    times = np.arange(start, len(y) - horizon) + horizon
    return times, preds
