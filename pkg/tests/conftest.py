import importlib.resources

import numpy as np
import pytest

from gevoforecast.dataset import TimeSeriesDataset
from gevoforecast.grammar import load_grammar


def grammar_path(name: str) -> str:
    return str(importlib.resources.files("gevoforecast") / "grammars" / name)


@pytest.fixture(scope="session")
def appendix_grammar():
    return load_grammar(grammar_path("appendix.bnf"))


@pytest.fixture(scope="session")
def cpu_grammar():
    return load_grammar(grammar_path("grammar3_cpu.bnf"))


@pytest.fixture(scope="session")
def inlet_grammar():
    return load_grammar(grammar_path("grammar3_inlet.bnf"))


@pytest.fixture(scope="session")
def wide_cpu_grammar():
    return load_grammar(grammar_path("grammar1_cpu.bnf"))


def make_dataset(**columns) -> TimeSeriesDataset:
    return TimeSeriesDataset({k: np.asarray(v, dtype=np.float64) for k, v in columns.items()})
