"""Scikit-learn style facade over the training pipeline and ARMA baseline.

These estimators make the engine composable with the wider ecosystem
(``get_params`` / ``set_params``, ``clone``, pipelines).  Inputs are named
multi-variable time series: a dict of equal-length 1-D arrays, a pandas
DataFrame, or a TimeSeriesDataset.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from . import arma as arma_mod
from .dataset import TimeSeriesDataset
from .errors import ConfigError, DataError
from .evolution import EvolutionConfig
from .fitness import BiasPolicy, rmse
from .grammar import Grammar, parse_grammar
from .model import predict as model_predict
from .training import train_model


def as_dataset(X) -> TimeSeriesDataset:
    """Coerce a DataFrame, mapping of columns, or dataset to TimeSeriesDataset."""
    if isinstance(X, TimeSeriesDataset):
        return X
    if hasattr(X, "columns") and hasattr(X, "__getitem__"):  # pandas-like
        return TimeSeriesDataset({str(c): np.asarray(X[c], dtype=np.float64) for c in X.columns})
    if isinstance(X, dict):
        return TimeSeriesDataset({k: np.asarray(v, dtype=np.float64) for k, v in X.items()})
    raise DataError(f"cannot interpret {type(X).__name__} as a named time series")


def check_series(y) -> np.ndarray:
    """Validate a single 1-D finite series."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError("expected a non-empty 1-D series")
    if not np.isfinite(arr).all():
        raise DataError("series contains non-finite values")
    return arr


class GrammaticalEvolutionForecaster(BaseEstimator, RegressorMixin):
    """Evolves window-lagged symbolic expressions and predicts by ensemble
    averaging the best distinct ones.

    Parameters mirror the engine defaults; ``grammar`` is BNF text or a
    parsed Grammar.  ``fit(X)`` expects the named training series (the target
    column is a parameter, so ``y`` is unused and kept for API compatibility).
    """

    def __init__(
        self,
        grammar=None,
        target: str = "y",
        horizon: int = 1,
        window: int = 20,
        mode: str = "real",
        bindings: Optional[Dict[str, str]] = None,
        smooth: Optional[Dict[str, int]] = None,
        standardize: bool = True,
        population_size: int = 200,
        chromosome_length: int = 100,
        generations: int = 2000,
        crossover_prob: float = 0.9,
        mutation_prob: Optional[float] = None,
        max_wraps: int = 3,
        tournament_size: int = 2,
        rog_mode: str = "2-RO",
        sdt_mode: str = "packing",
        packing_keep_fraction: float = 0.05,
        stagnation_window: int = 500,
        target_fitness: Optional[float] = None,
        bias_groups=None,
        bias_factor: float = 2.0,
        ensemble_size: int = 5,
        random_state: int = 0,
    ):
        self.grammar = grammar
        self.target = target
        self.horizon = horizon
        self.window = window
        self.mode = mode
        self.bindings = bindings
        self.smooth = smooth
        self.standardize = standardize
        self.population_size = population_size
        self.chromosome_length = chromosome_length
        self.generations = generations
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.max_wraps = max_wraps
        self.tournament_size = tournament_size
        self.rog_mode = rog_mode
        self.sdt_mode = sdt_mode
        self.packing_keep_fraction = packing_keep_fraction
        self.stagnation_window = stagnation_window
        self.target_fitness = target_fitness
        self.bias_groups = bias_groups
        self.bias_factor = bias_factor
        self.ensemble_size = ensemble_size
        self.random_state = random_state

    def _grammar(self) -> Grammar:
        if self.grammar is None:
            raise ConfigError("a grammar is required")
        if isinstance(self.grammar, Grammar):
            return self.grammar
        return parse_grammar(self.grammar)

    def fit(self, X, y=None):
        evo = EvolutionConfig(
            population_size=self.population_size,
            chromosome_length=self.chromosome_length,
            crossover_prob=self.crossover_prob,
            mutation_prob=self.mutation_prob,
            max_wraps=self.max_wraps,
            tournament_size=self.tournament_size,
            generations=self.generations,
            rng_seed=self.random_state,
            rog_mode=self.rog_mode,
            sdt_mode=self.sdt_mode,
            packing_keep_fraction=self.packing_keep_fraction,
            stagnation_window=self.stagnation_window,
            target_fitness=self.target_fitness,
        )
        bias = None
        if self.bias_groups:
            bias = BiasPolicy([set(g) for g in self.bias_groups], self.bias_factor)
        self.model_, self.run_log_ = train_model(
            as_dataset(X),
            self._grammar(),
            window=self.window,
            horizon=self.horizon,
            target=self.target,
            mode=self.mode,
            bindings=self.bindings,
            smooth=self.smooth,
            apply_standardization=self.standardize,
            evo_config=evo,
            bias=bias,
            ensemble_size=self.ensemble_size,
        )
        self.phenotypes_ = [text for text, _ in self.model_.members]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise ConfigError("estimator is not fitted")
        return model_predict(self.model_, as_dataset(X)).predictions

    def score(self, X, y=None) -> float:
        """Negative RMSE against the measured target, original units."""
        result = model_predict(self.model_, as_dataset(X))
        return -rmse(result.predictions - result.actuals)


class ArmaOrderSearchForecaster(BaseEstimator, RegressorMixin):
    """ARMA baseline: FPE order identification on fit, recursive multi-step
    forecasting on predict."""

    def __init__(self, horizon: int = 1, p_max: int = 10, q_max: int = 10):
        self.horizon = horizon
        self.p_max = p_max
        self.q_max = q_max

    def fit(self, X, y=None):
        series = check_series(X)
        self.model_, self.fpe_table_ = arma_mod.identify_with_table(series, self.p_max, self.q_max)
        return self

    def predict(self, X) -> np.ndarray:
        """Rolling horizon-step forecasts over the given series.

        Returns one prediction per base time from ``max(p, q)`` onward,
        aligned with target times ``base + horizon``.
        """
        if not hasattr(self, "model_"):
            raise ConfigError("estimator is not fitted")
        series = check_series(X)
        _, preds = arma_mod.rolling_forecast(self.model_, series, self.horizon, 0)
        return preds

    def forecast(self, history, steps: Optional[int] = None) -> float:
        if not hasattr(self, "model_"):
            raise ConfigError("estimator is not fitted")
        return arma_mod.forecast(self.model_, check_series(history), steps if steps is not None else self.horizon)
