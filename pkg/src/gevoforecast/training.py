"""End-to-end training pipeline shared by the CLI and the estimator facade.

Order of operations mirrors inference: smooth flagged source columns, rename
source columns to grammar identifiers, fit the [1, 2] standardization on the
training split, evolve, then keep the best distinct phenotypes as the
ensemble.
"""

from __future__ import annotations

from dataclasses import asdict
from typing import Dict, Optional

from .dataset import TimeSeriesDataset, WindowSpec, lowpass, standardize
from .errors import ConfigError
from .evolution import EvolutionConfig, RunLog, evolve
from .fitness import BiasPolicy
from .grammar import Grammar, variable_identifiers
from .model import TrainedModel, build_ensemble


def resolve_bindings(
    grammar: Grammar,
    bindings: Optional[Dict[str, str]],
    mode: str,
) -> Dict[str, str]:
    """Complete and sanity-check identifier -> source-column bindings.

    Identifiers without an explicit binding map to a column of the same
    name.  Exactly one identifier must be bound to ``@prediction`` for
    predictive and mixed modes; none for real mode.
    """
    bindings = dict(bindings) if bindings else {}
    identifiers = variable_identifiers(grammar)
    unknown = set(bindings) - identifiers
    if unknown:
        raise ConfigError(f"bindings for identifiers not in the grammar: {sorted(unknown)}")
    for ident in identifiers:
        bindings.setdefault(ident, ident)
    pred_vars = [ident for ident, col in bindings.items() if col == "@prediction"]
    if mode in ("predictive", "mixed"):
        if len(pred_vars) != 1:
            raise ConfigError(
                f"mode {mode!r} requires exactly one identifier bound to @prediction, got {pred_vars}"
            )
    elif pred_vars:
        raise ConfigError("real mode cannot bind a prediction variable")
    return bindings


def prepare_dataset(
    raw: TimeSeriesDataset,
    bindings: Dict[str, str],
    smooth: Optional[Dict[str, int]] = None,
) -> TimeSeriesDataset:
    """Smooth flagged source columns and rename them to grammar identifiers."""
    smooth = smooth or {}
    cols = dict(raw.columns)
    for column, window in smooth.items():
        if column not in cols:
            raise ConfigError(f"smoothed column {column!r} missing from dataset")
        cols[column] = lowpass(cols[column], window)
    ds = TimeSeriesDataset(cols, raw.sample_interval)
    rename = {col: ident for ident, col in bindings.items() if col != "@prediction"}
    missing = [col for col in rename if col not in ds.columns]
    if missing:
        raise ConfigError(f"bound column(s) missing from dataset: {sorted(missing)}")
    return ds.rename(rename)


def train_model(
    raw: TimeSeriesDataset,
    grammar: Grammar,
    window: int,
    horizon: int,
    target: str,
    mode: str = "mixed",
    bindings: Optional[Dict[str, str]] = None,
    smooth: Optional[Dict[str, int]] = None,
    apply_standardization: bool = True,
    evo_config: Optional[EvolutionConfig] = None,
    bias: Optional[BiasPolicy] = None,
    ensemble_size: int = 5,
):
    """Train on one split; returns (TrainedModel, RunLog)."""
    evo_config = evo_config if evo_config is not None else EvolutionConfig()
    bindings = resolve_bindings(grammar, bindings, mode)
    ds = prepare_dataset(raw, bindings, smooth)
    if target not in ds.columns:
        raise ConfigError(
            f"target {target!r} is neither a grammar identifier nor a dataset column"
        )
    prediction_var = next((i for i, c in bindings.items() if c == "@prediction"), None)
    params = None
    if apply_standardization:
        data_columns = {i for i, c in bindings.items() if c != "@prediction"}
        data_columns.add(target)
        ds, params = standardize(ds, columns=sorted(data_columns))
    spec = WindowSpec(
        window=window,
        horizon=horizon,
        target=target,
        prediction_var=prediction_var,
        mode=mode,
    )
    population, log = evolve(evo_config, grammar, ds, spec, bias=bias, target_params=params)
    snapshot = asdict(evo_config)
    snapshot["standardize"] = apply_standardization
    model = build_ensemble(
        population,
        k=ensemble_size,
        spec=spec,
        standardization=params,
        bindings=bindings,
        smooth=smooth or {},
        config_snapshot=snapshot,
        rng_seed=evo_config.rng_seed,
    )
    return model, log
