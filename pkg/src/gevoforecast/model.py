"""Trained predictor assembly, persistence, and application.

The final predictor is an ensemble of the best distinct phenotypes found by
the evolutionary run (up to five).  Each member recurses on its own past
predictions: members keep private prediction buffers and the ensemble output
at each step is the mean of the members that evaluated to a finite value.
When every member fails at a step, the last measured target value is emitted
instead and the step is flagged.

Model files are JSON with a format version and a checksum over the payload.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import expr as xp
from .dataset import (
    PredictionBuffer,
    StandardizationParams,
    TimeSeriesDataset,
    WindowSpec,
    check_lags,
    check_mode,
    lowpass,
    standardize,
)
from .errors import ComputeError, DataError
from .evolution import Individual
from .fitness import mae, rmse

FORMAT_VERSION = 1


@dataclass
class TrainedModel:
    members: List[tuple]  # (phenotype text, training fitness), best first
    spec: WindowSpec
    standardization: Optional[StandardizationParams]
    bindings: Dict[str, str]  # grammar identifier -> source column name
    smooth: Dict[str, int]  # source column name -> low-pass window
    config_snapshot: Dict[str, object] = field(default_factory=dict)
    rng_seed: int = 0

    def member_expressions(self) -> List[xp.Node]:
        return [xp.parse(text, prediction_var=self.spec.prediction_var) for text, _ in self.members]


def build_ensemble(
    population: List[Individual],
    k: int = 5,
    spec: Optional[WindowSpec] = None,
    **model_fields,
) -> TrainedModel:
    """Top-k distinct finite phenotypes from a final population.

    Phenotypes are constant-folded for persistence; duplicates after folding
    are merged, keeping the best fitness.
    """
    finite = [
        ind
        for ind in population
        if ind.fitness is not None and math.isfinite(ind.fitness) and ind.phenotype
    ]
    if not finite:
        raise ComputeError("no individual with finite fitness; cannot build an ensemble")
    finite.sort(key=lambda ind: ind.fitness)
    model_fields.setdefault("standardization", None)
    model_fields.setdefault("bindings", {})
    model_fields.setdefault("smooth", {})
    prediction_var = spec.prediction_var if spec is not None else None
    members: List[tuple] = []
    seen = set()
    for ind in finite:
        folded = xp.render(xp.fold_constants(xp.parse(ind.phenotype, prediction_var)))
        if folded in seen:
            continue
        seen.add(folded)
        members.append((folded, float(ind.fitness)))
        if len(members) == k:
            break
    return TrainedModel(members=members, spec=spec, **model_fields)


@dataclass
class PredictionResult:
    times: np.ndarray  # absolute target times (row indices)
    predictions: np.ndarray  # original units
    actuals: np.ndarray  # original units
    flagged: np.ndarray  # True where the persistence fallback was emitted

    def metrics(self) -> Dict[str, float]:
        err = self.predictions - self.actuals
        return {"rmse": rmse(err), "mae": mae(err), "flagged": int(self.flagged.sum())}


def _preprocess(model: TrainedModel, ds: TimeSeriesDataset) -> TimeSeriesDataset:
    for column, window in model.smooth.items():
        name = column if column in ds.columns else None
        if name is None:
            raise DataError(f"smoothed column {column!r} missing from dataset")
        cols = dict(ds.columns)
        cols[name] = lowpass(cols[name], window)
        ds = TimeSeriesDataset(cols, ds.sample_interval)
    rename = {src: ident for ident, src in model.bindings.items() if src != "@prediction"}
    ds = ds.rename(rename)
    if model.standardization is not None:
        ds, _ = standardize(ds, model.standardization, columns=list(model.standardization.bounds))
    return ds


def predict(model: TrainedModel, raw: TimeSeriesDataset) -> PredictionResult:
    """Apply the full inference pipeline to a raw, unpreprocessed dataset."""
    if not model.members:
        raise ComputeError("model has no members")
    spec = model.spec
    ds = _preprocess(model, raw)
    exprs = model.member_expressions()
    for e in exprs:
        check_mode(e, spec)
        check_lags(e, spec)
    target = ds.column(spec.target)
    n = ds.n_rows
    k_start, k_stop = spec.window, n - spec.horizon
    if k_stop <= k_start:
        raise DataError("series too short for the model's window and horizon")
    cols = ds.columns
    horizon = spec.horizon
    buffers = [PredictionBuffer(target) for _ in exprs]
    n_steps = k_stop - k_start
    preds = np.empty(n_steps, dtype=np.float64)
    flagged = np.zeros(n_steps, dtype=bool)
    ctx = xp.EvalContext(feature=None, prediction=None)
    for i, k in enumerate(range(k_start, k_stop)):
        ctx.feature = lambda name, lag, k=k: cols[name][k - lag]
        total = 0.0
        count = 0
        for e, buf in zip(exprs, buffers):
            ctx.prediction = lambda lag, k=k, buf=buf: buf.resolve(k + horizon - lag)
            v = xp.evaluate(e, ctx)
            if math.isfinite(v):
                buf.emit(k + horizon, v)
                total += v
                count += 1
        if count:
            preds[i] = total / count
        else:
            preds[i] = target[k]  # persistence fallback
            flagged[i] = True
    times = np.arange(k_start, k_stop) + horizon
    actual = target[times]
    if model.standardization is not None and spec.target in model.standardization.bounds:
        preds_out = model.standardization.inverse_value(spec.target, preds)
        actual_out = model.standardization.inverse_value(spec.target, actual)
    else:
        preds_out, actual_out = preds, actual
    return PredictionResult(times, preds_out, actual_out, flagged)


def _payload(model: TrainedModel) -> dict:
    std = None
    if model.standardization is not None:
        std = {name: [repr(lo), repr(hi)] for name, (lo, hi) in sorted(model.standardization.bounds.items())}
    return {
        "format_version": FORMAT_VERSION,
        "members": [{"phenotype": text, "fitness": repr(f)} for text, f in model.members],
        "window": model.spec.window,
        "horizon": model.spec.horizon,
        "target": model.spec.target,
        "prediction_var": model.spec.prediction_var,
        "mode": model.spec.mode,
        "standardization": std,
        "bindings": dict(sorted(model.bindings.items())),
        "smooth": dict(sorted(model.smooth.items())),
        "config": model.config_snapshot,
        "rng_seed": model.rng_seed,
    }


def save(model: TrainedModel, path) -> None:
    payload = _payload(model)
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    checksum = hashlib.sha256(blob.encode("utf-8")).hexdigest()
    doc = {"checksum": checksum, "payload": payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load(path) -> TrainedModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: malformed model file: {exc}") from None
    if not isinstance(doc, dict) or "payload" not in doc or "checksum" not in doc:
        raise DataError(f"{path}: malformed model file: missing payload or checksum")
    payload = doc["payload"]
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    if hashlib.sha256(blob.encode("utf-8")).hexdigest() != doc["checksum"]:
        raise DataError(f"{path}: checksum failure")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported model format version {version!r}; supported: {FORMAT_VERSION}"
        )
    std = None
    if payload["standardization"] is not None:
        std = StandardizationParams(
            {name: (float(lo), float(hi)) for name, (lo, hi) in payload["standardization"].items()}
        )
    spec = WindowSpec(
        window=payload["window"],
        horizon=payload["horizon"],
        target=payload["target"],
        prediction_var=payload["prediction_var"],
        mode=payload["mode"],
    )
    return TrainedModel(
        members=[(m["phenotype"], float(m["fitness"])) for m in payload["members"]],
        spec=spec,
        standardization=std,
        bindings=payload["bindings"],
        smooth={k: int(v) for k, v in payload["smooth"].items()},
        config_snapshot=payload["config"],
        rng_seed=payload["rng_seed"],
    )
