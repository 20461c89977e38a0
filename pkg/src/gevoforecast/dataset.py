"""Time-series ingestion, preprocessing, and windowed series evaluation.

A dataset is a set of equal-length named columns sampled at a fixed
interval.  A window spec fixes the data window (largest usable lag), the
prediction horizon, the target column, and the model mode:

- ``real``: expressions may not use prediction references;
- ``predictive``: expressions may not use measured target lags;
- ``mixed``: both are allowed.

Multi-step evaluation is recursive: each emitted prediction is appended to a
prediction buffer that later base times can reference.  Before a prediction
exists for a given instant, prediction references fall back to the measured
target (warm-up).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from . import expr as xp
from .errors import ComputeError, DataError


@dataclass
class TimeSeriesDataset:
    columns: Dict[str, np.ndarray]  # equal-length float64 arrays
    sample_interval: float = 1.0

    def __post_init__(self):
        if not self.columns:
            raise DataError("dataset has no columns")
        if self.sample_interval <= 0:
            raise DataError("sample interval must be positive")
        lengths = {name: len(col) for name, col in self.columns.items()}
        if len(set(lengths.values())) != 1:
            raise DataError(f"columns differ in length: {lengths}")
        self.columns = {
            name: np.asarray(col, dtype=np.float64) for name, col in self.columns.items()
        }

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values())))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"dataset has no column {name!r}") from None

    def rename(self, mapping: Dict[str, str]) -> "TimeSeriesDataset":
        """New dataset with columns renamed per {old: new}; others kept."""
        cols = {mapping.get(name, name): col for name, col in self.columns.items()}
        return TimeSeriesDataset(cols, self.sample_interval)

    def slice(self, start: int, stop: int) -> "TimeSeriesDataset":
        return TimeSeriesDataset(
            {name: col[start:stop].copy() for name, col in self.columns.items()},
            self.sample_interval,
        )


@dataclass(frozen=True)
class WindowSpec:
    window: int  # largest lag visible to expressions
    horizon: int  # samples ahead of the base time the target lies
    target: str  # target column name (post-binding identifier)
    prediction_var: Optional[str] = None  # identifier bound to past predictions
    mode: str = "mixed"  # real | predictive | mixed

    def __post_init__(self):
        if self.window < 0:
            raise DataError("data window must be non-negative")
        if self.horizon < 1:
            raise DataError("prediction horizon must be >= 1")
        if self.mode not in ("real", "predictive", "mixed"):
            raise DataError(f"unknown model mode {self.mode!r}")
        if self.mode in ("predictive", "mixed") and not self.prediction_var:
            raise DataError(f"mode {self.mode!r} requires a prediction variable")


def load_csv(path, columns: Optional[Sequence[str]] = None) -> TimeSeriesDataset:
    """Load a comma-separated file with a header row.

    When ``columns`` is given, those columns must exist and only they are
    kept.  Any unparseable or non-finite cell is an error naming the row.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        wanted = list(columns) if columns is not None else header
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in wanted]
        data = {c: [] for c in wanted}
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {rowno} has {len(row)} cells, expected {len(header)}")
            for c, i in zip(wanted, idx):
                try:
                    v = float(row[i])
                except ValueError:
                    raise DataError(f"{path}: row {rowno}: non-numeric cell {row[i]!r} in column {c}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {rowno}: non-finite value in column {c}")
                data[c].append(v)
    if not data[wanted[0]]:
        raise DataError(f"{path}: no data rows")
    return TimeSeriesDataset({c: np.array(vs, dtype=np.float64) for c, vs in data.items()})


def save_csv(ds: TimeSeriesDataset, path) -> None:
    names = list(ds.columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*(ds.columns[n] for n in names)):
            writer.writerow([np.format_float_positional(v, unique=True, trim="0") for v in row])


def lowpass(column: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; edges use truncated windows."""
    if window < 1 or window % 2 == 0:
        raise DataError("low-pass window must be an odd positive integer")
    col = np.asarray(column, dtype=np.float64)
    if window > len(col):
        raise DataError("low-pass window larger than the column")
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(col)))
    n = len(col)
    i = np.arange(n)
    lo = np.maximum(i - half, 0)
    hi = np.minimum(i + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


@dataclass
class StandardizationParams:
    """Per-column (min, max) learned on the training split."""

    bounds: Dict[str, tuple]

    def transform_value(self, name: str, v):
        lo, hi = self.bounds[name]
        return 1.0 + (v - lo) / (hi - lo)

    def inverse_value(self, name: str, v):
        lo, hi = self.bounds[name]
        return lo + (v - 1.0) * (hi - lo)

    def scale(self, name: str) -> float:
        lo, hi = self.bounds[name]
        return hi - lo


def standardize(
    ds: TimeSeriesDataset,
    params: Optional[StandardizationParams] = None,
    columns: Optional[Sequence[str]] = None,
):
    """Affine map of each column onto [1, 2] using training min/max.

    With ``params`` supplied (test split) the stored map is applied as-is, so
    values may leave [1, 2].  Returns (new dataset, params).
    """
    names = list(columns) if columns is not None else list(ds.columns)
    if params is None:
        bounds = {}
        for name in names:
            col = ds.column(name)
            lo, hi = float(col.min()), float(col.max())
            if hi <= lo:
                raise DataError(f"column {name!r} is constant; cannot standardize")
            bounds[name] = (lo, hi)
        params = StandardizationParams(bounds)
    cols = dict(ds.columns)
    for name in names:
        if name not in params.bounds:
            raise DataError(f"no standardization bounds for column {name!r}")
        cols[name] = params.transform_value(name, ds.column(name))
    return TimeSeriesDataset(cols, ds.sample_interval), params


class PredictionBuffer:
    """Predictions already emitted during a recursive evaluation.

    A prediction reference with lag ``j`` at base time ``k`` resolves to the
    value emitted for target time ``k + horizon - j``; if none was emitted
    for that time, the measured target is used instead.
    """

    def __init__(self, measured_target: np.ndarray, initial: Optional[dict] = None):
        self.measured = measured_target
        self.emitted: dict = dict(initial) if initial else {}

    def resolve(self, target_time: int) -> float:
        if target_time in self.emitted:
            return self.emitted[target_time]
        if target_time < 0:
            raise ComputeError(f"prediction reference before the start of the series ({target_time})")
        return float(self.measured[target_time])

    def emit(self, target_time: int, value: float) -> None:
        self.emitted[target_time] = value


@dataclass
class SeriesEvaluation:
    times: np.ndarray  # absolute target times (row indices)
    predictions: np.ndarray
    actuals: np.ndarray


def check_mode(e: xp.Node, spec: WindowSpec) -> None:
    """Raise on a model-mode violation for expression ``e``."""
    if spec.mode == "real" and xp.has_pred_refs(e):
        raise ComputeError("mode violation: real model uses prediction references")
    if spec.mode == "predictive":
        for node in xp.walk(e):
            if isinstance(node, xp.VarRef) and node.name == spec.target:
                raise ComputeError(
                    "mode violation: predictive model uses measured target lags"
                )


def check_lags(e: xp.Node, spec: WindowSpec) -> None:
    var_lag, pred_lag = xp.max_lags(e)
    if max(var_lag, pred_lag) > spec.window:
        raise ComputeError(
            f"expression lag {max(var_lag, pred_lag)} exceeds data window {spec.window}"
        )


class SeriesEvaluator:
    """Evaluates expressions over every base time of one dataset split.

    Base times run over ``[window, n - 1 - horizon]``.  Expressions without
    prediction references are evaluated in one vectorized pass over lagged
    column views; recursive expressions fall back to a sequential loop with a
    prediction buffer.
    """

    def __init__(self, ds: TimeSeriesDataset, spec: WindowSpec):
        self.ds = ds
        self.spec = spec
        self.n = ds.n_rows
        self.k_start = spec.window
        self.k_stop = self.n - spec.horizon  # exclusive
        if self.k_stop <= self.k_start:
            raise DataError(
                f"series too short: {self.n} rows for window {spec.window} and horizon {spec.horizon}"
            )
        self.target = ds.column(spec.target)
        self.times = np.arange(self.k_start, self.k_stop) + spec.horizon
        self._lag_views: dict = {}

    @property
    def n_predictions(self) -> int:
        return self.k_stop - self.k_start

    def lag_view(self, name: str, lag: int) -> np.ndarray:
        key = (name, lag)
        view = self._lag_views.get(key)
        if view is None:
            col = self.ds.column(name)
            view = col[self.k_start - lag:self.k_stop - lag]
            self._lag_views[key] = view
        return view

    def predictions(self, e: xp.Node, buffer: Optional[PredictionBuffer] = None):
        """Prediction per base time, or None if any step was non-finite."""
        check_mode(e, self.spec)
        check_lags(e, self.spec)
        if not xp.has_pred_refs(e):
            features = {
                (node.name, node.lag): self.lag_view(node.name, node.lag)
                for node in xp.walk(e)
                if isinstance(node, xp.VarRef)
            }
            if not features:  # constant expression
                features = {("", 0): np.zeros(self.n_predictions)}
                values = xp.evaluate_batch(e, features)
            else:
                values = xp.evaluate_batch(e, features)
            values = np.asarray(values, dtype=np.float64)
            if values.ndim == 0:
                values = np.full(self.n_predictions, float(values))
            return None if np.isnan(values).any() else values
        return self._predict_sequential(e, buffer)

    def _predict_sequential(self, e: xp.Node, buffer: Optional[PredictionBuffer]):
        spec = self.spec
        cols = self.ds.columns
        buf = buffer if buffer is not None else PredictionBuffer(self.target)
        out = np.empty(self.n_predictions, dtype=np.float64)
        horizon = spec.horizon
        ctx = xp.EvalContext(feature=None, prediction=None)  # rebound per step
        for i, k in enumerate(range(self.k_start, self.k_stop)):
            ctx.feature = lambda name, lag, k=k: cols[name][k - lag]
            ctx.prediction = lambda lag, k=k: buf.resolve(k + horizon - lag)
            v = xp.evaluate(e, ctx)
            if not math.isfinite(v):
                return None
            out[i] = v
            buf.emit(k + horizon, v)
        return out

    def evaluate(self, e: xp.Node, buffer: Optional[PredictionBuffer] = None):
        preds = self.predictions(e, buffer)
        if preds is None:
            return None
        actuals = self.target[self.times]
        return SeriesEvaluation(self.times.copy(), preds, actuals)


def evaluate_series(
    e: xp.Node,
    ds: TimeSeriesDataset,
    spec: WindowSpec,
    buffer: Optional[PredictionBuffer] = None,
):
    """One-shot recursive evaluation; None when any step is non-finite."""
    return SeriesEvaluator(ds, spec).evaluate(e, buffer)


def fold_bounds(n_rows: int, n_folds: int = 5) -> list:
    """Contiguous chronological [start, stop) blocks covering the series."""
    if n_folds < 2 or n_folds > n_rows:
        raise DataError(f"cannot split {n_rows} rows into {n_folds} folds")
    edges = np.linspace(0, n_rows, n_folds + 1).astype(int)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(n_folds)]
