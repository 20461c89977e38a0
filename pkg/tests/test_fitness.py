import math

import numpy as np
import pytest

from conftest import make_dataset
from gevoforecast.dataset import StandardizationParams, WindowSpec, standardize
from gevoforecast.fitness import (
    INVALID_FITNESS,
    BiasPolicy,
    mae,
    residuals_in_original_units,
    rmse,
    score,
)
from gevoforecast.expr import parse


def test_rmse_examples():
    assert rmse([0, 0, 0]) == 0.0
    assert rmse([3, 4]) == pytest.approx(math.sqrt(12.5), rel=1e-15)
    assert rmse([-2.5] * 7) == 2.5


def test_mae_examples():
    assert mae([0, 0]) == 0.0
    assert mae([3, -4]) == 3.5
    assert mae([-2]) == 2.0


def test_empty_sequences_rejected():
    with pytest.raises(ValueError):
        rmse([])
    with pytest.raises(ValueError):
        mae([])


def test_rmse_ge_mae_on_random_vectors():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.normal(size=int(rng.integers(1, 50)))
        assert rmse(v) >= mae(v) >= 0.0


def test_bias_policy():
    bias = BiasPolicy([{"PS"}, {"FS"}, {"TIN"}], 2.0)
    assert bias.penalty({"PS", "FS", "TIN"}) == 1.0
    assert bias.penalty({"PS", "FS"}) == 2.0
    assert bias.penalty(set()) == 8.0
    with pytest.raises(ValueError):
        BiasPolicy([], 1.0)


def test_residuals_destandardized_by_target_range():
    params = StandardizationParams({"TS": (10.0, 30.0)})
    preds = np.array([1.5, 1.6])
    actual = np.array([1.4, 1.4])
    res = residuals_in_original_units(preds, actual, "TS", params)
    # a 0.1 gap in standardized units spans 0.1 * 20 physical units
    assert np.allclose(res, [2.0, 4.0], rtol=1e-12)
    plain = residuals_in_original_units(preds, actual, "TS", None)
    assert np.allclose(plain, [0.1, 0.2])


def constant_series_setup():
    ds = make_dataset(TS=np.full(20, 30.0), PS=np.arange(20, dtype=np.float64))
    spec = WindowSpec(window=2, horizon=1, target="TS", mode="real")
    return ds, spec


def test_persistence_on_constant_target_scores_zero():
    ds, spec = constant_series_setup()
    assert score(parse("TS[k-0]"), ds, spec) == 0.0


def test_bias_doubles_score():
    ds, spec = constant_series_setup()
    base = score(parse("TS[k-1]+1.0"), ds, spec)
    biased = score(parse("TS[k-1]+1.0"), ds, spec, bias=BiasPolicy([{"PS"}], 2.0))
    assert biased == 2.0 * base
    assert base == 1.0


def test_mode_violation_scores_infinite():
    ds, spec = constant_series_setup()
    assert score(parse("TS[k-1]", prediction_var="TS"), ds, spec) == INVALID_FITNESS


def test_nonfinite_scores_infinite():
    ds = make_dataset(TS=[1.0, 0.0, 2.0, 3.0, 4.0, 5.0])
    spec = WindowSpec(window=2, horizon=1, target="TS", mode="real")
    assert score(parse("1.0/TS[k-1]"), ds, spec) == INVALID_FITNESS


def test_score_matches_direct_recomputation():
    rng = np.random.default_rng(1)
    ts = rng.normal(25.0, 3.0, size=100)
    ds = make_dataset(TS=ts)
    spec = WindowSpec(window=5, horizon=2, target="TS", mode="real")
    std_ds, params = standardize(ds)
    got = score(parse("TS[k-3]"), std_ds, spec, target_params=params)
    # independent direct arithmetic in original units
    lo, hi = params.bounds["TS"]
    col = std_ds.column("TS")
    preds = np.array([col[k - 3] for k in range(5, 98)])
    actual = np.array([col[k + 2] for k in range(5, 98)])
    want = math.sqrt(np.mean(((preds - actual) * (hi - lo)) ** 2))
    assert got == pytest.approx(want, rel=1e-12)
    assert got >= 0.0
