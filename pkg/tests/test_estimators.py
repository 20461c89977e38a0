import numpy as np
import pytest
from sklearn.base import clone

from gevoforecast.errors import ConfigError, DataError
from gevoforecast.estimators import (
    ArmaOrderSearchForecaster,
    GrammaticalEvolutionForecaster,
    as_dataset,
    check_series,
)
from gevoforecast.synth import generate_arma, generate_planted

PLANTED_GRAMMAR = """
<expr> ::= <expr><op><expr> | <cte>*<var> | <var> | <cte>
<op> ::= + | - | * | /
<var> ::= x1[k-<idx>] | x2[k-<idx>]
<idx> ::= 0 | 1
<cte> ::= 0.5 | 2.3 | 1.0
"""


def small_forecaster(**kw):
    base = dict(
        grammar=PLANTED_GRAMMAR,
        target="y",
        window=2,
        horizon=1,
        mode="real",
        population_size=30,
        chromosome_length=20,
        generations=5,
        random_state=0,
    )
    base.update(kw)
    return GrammaticalEvolutionForecaster(**base)


def test_as_dataset_accepts_dict():
    ds = as_dataset({"a": [1.0, 2.0], "b": [3.0, 4.0]})
    assert ds.n_rows == 2


def test_as_dataset_rejects_junk():
    with pytest.raises(DataError):
        as_dataset(42)


def test_check_series():
    arr = check_series([1.0, 2.0])
    assert arr.dtype == np.float64
    with pytest.raises(DataError):
        check_series([[1.0], [2.0]])
    with pytest.raises(DataError):
        check_series([1.0, float("nan")])


def test_get_params_round_trip_and_clone():
    est = small_forecaster()
    params = est.get_params()
    assert params["target"] == "y"
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(generations=7)
    assert est.get_params()["generations"] == 7


def test_fit_predict_score():
    ds = generate_planted(0, 300)
    est = small_forecaster().fit(ds)
    assert hasattr(est, "model_") and est.phenotypes_
    preds = est.predict(ds)
    assert preds.shape == (300 - 2 - 1,)
    assert est.score(ds) <= 0.0  # negative RMSE


def test_predict_before_fit():
    with pytest.raises(ConfigError):
        small_forecaster().predict(generate_planted(0, 100))


def test_fit_requires_grammar():
    with pytest.raises(ConfigError):
        GrammaticalEvolutionForecaster().fit(generate_planted(0, 100))


def test_fit_deterministic_for_random_state():
    ds = generate_planted(0, 300)
    a = small_forecaster().fit(ds)
    b = small_forecaster().fit(ds)
    assert a.phenotypes_ == b.phenotypes_


def test_arma_estimator():
    series = generate_arma(0, 1500).column("y")
    est = ArmaOrderSearchForecaster(horizon=3, p_max=3, q_max=3).fit(series)
    assert est.model_.order_sum >= 1
    assert len(est.fpe_table_) == 15  # 4*4 grid minus (0,0)
    preds = est.predict(series)
    assert np.isfinite(preds).all()
    single = est.forecast(series)
    assert np.isfinite(single)


def test_arma_estimator_clone_and_guards():
    est = ArmaOrderSearchForecaster()
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(ConfigError):
        est.predict(np.zeros(10) + np.arange(10))
