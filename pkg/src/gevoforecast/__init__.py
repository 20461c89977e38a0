"""Grammar-guided evolutionary symbolic regression for time-series
forecasting, with an FPE-identified ARMA baseline."""

from .arma import ArmaModel, fit as arma_fit, forecast as arma_forecast, fpe, identify
from .dataset import (
    PredictionBuffer,
    StandardizationParams,
    TimeSeriesDataset,
    WindowSpec,
    load_csv,
    lowpass,
    save_csv,
    standardize,
)
from .errors import ComputeError, ConfigError, DataError, GevoError, GrammarError
from .evolution import EvolutionConfig, evolve
from .expr import evaluate, fold_constants, parse, render
from .fitness import BiasPolicy, mae, rmse, score
from .genotype import MappingResult, map_genotype, random_chromosome
from .grammar import Grammar, list_variables, load_grammar, parse_grammar
from .model import TrainedModel, build_ensemble, load, predict, save
from .training import train_model

__version__ = "0.1.0"

__all__ = [
    "ArmaModel",
    "BiasPolicy",
    "ComputeError",
    "ConfigError",
    "DataError",
    "EvolutionConfig",
    "GevoError",
    "Grammar",
    "GrammarError",
    "MappingResult",
    "PredictionBuffer",
    "StandardizationParams",
    "TimeSeriesDataset",
    "TrainedModel",
    "WindowSpec",
    "arma_fit",
    "arma_forecast",
    "build_ensemble",
    "evaluate",
    "evolve",
    "fold_constants",
    "fpe",
    "identify",
    "list_variables",
    "load",
    "load_csv",
    "load_grammar",
    "lowpass",
    "mae",
    "map_genotype",
    "parse",
    "parse_grammar",
    "predict",
    "random_chromosome",
    "render",
    "rmse",
    "save",
    "save_csv",
    "score",
    "standardize",
    "train_model",
    "__version__",
]
