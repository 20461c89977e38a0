import numpy as np
import pytest

from conftest import make_dataset
from gevoforecast.errors import ConfigError
from gevoforecast.evolution import EvolutionConfig
from gevoforecast.grammar import parse_grammar
from gevoforecast.model import predict
from gevoforecast.synth import generate_planted
from gevoforecast.training import prepare_dataset, resolve_bindings, train_model

GRAMMAR = parse_grammar(
    """
<expr> ::= <expr><op><expr> | <var> | <cte>
<op> ::= + | - | * | /
<var> ::= TS[k-<idx>] | TpS[k-<idx>] | PS[k-<idx>]
<idx> ::= 1 | 2
<cte> ::= 1.0 | 2.0
"""
)


def test_resolve_bindings_fills_identity():
    bindings = resolve_bindings(GRAMMAR, {"TpS": "@prediction"}, "mixed")
    assert bindings == {"TS": "TS", "PS": "PS", "TpS": "@prediction"}


def test_resolve_bindings_mode_rules():
    with pytest.raises(ConfigError, match="@prediction"):
        resolve_bindings(GRAMMAR, None, "mixed")  # none bound
    with pytest.raises(ConfigError, match="@prediction"):
        resolve_bindings(
            GRAMMAR, {"TpS": "@prediction", "PS": "@prediction"}, "mixed"
        )  # two bound
    with pytest.raises(ConfigError, match="real"):
        resolve_bindings(GRAMMAR, {"TpS": "@prediction"}, "real")


def test_resolve_bindings_rejects_unknown_identifier():
    with pytest.raises(ConfigError, match="XX"):
        resolve_bindings(GRAMMAR, {"XX": "col"}, "real")


def test_prepare_dataset_missing_column_named():
    ds = make_dataset(TS=np.zeros(10) + np.arange(10))
    bindings = {"TS": "TS", "PS": "power", "TpS": "@prediction"}
    with pytest.raises(ConfigError, match="power"):
        prepare_dataset(ds, bindings)


def test_prepare_dataset_smooth_missing_column():
    ds = make_dataset(TS=np.arange(10, dtype=np.float64))
    with pytest.raises(ConfigError, match="nope"):
        prepare_dataset(ds, {"TS": "TS"}, smooth={"nope": 5})


def test_prepare_dataset_smooths_then_renames():
    raw = make_dataset(cpu=np.array([0.0, 3.0, 0.0, 3.0, 0.0]))
    out = prepare_dataset(raw, {"TS": "cpu"}, smooth={"cpu": 3})
    assert out.column("TS").tolist() == [1.5, 1.0, 2.0, 1.0, 1.5]


def quick_config(**kw):
    base = dict(population_size=30, chromosome_length=20, generations=5, rng_seed=0)
    base.update(kw)
    return EvolutionConfig(**base)


def test_train_model_end_to_end():
    ds = generate_planted(0, 300)
    grammar = parse_grammar(
        """
<expr> ::= <expr><op><expr> | <cte>*<var> | <var> | <cte>
<op> ::= + | - | * | /
<var> ::= x1[k-<idx>] | x2[k-<idx>]
<idx> ::= 0 | 1
<cte> ::= 0.5 | 2.3 | 1.0
"""
    )
    model, log = train_model(
        ds,
        grammar,
        window=2,
        horizon=1,
        target="y",
        mode="real",
        apply_standardization=True,
        evo_config=quick_config(),
    )
    assert 1 <= len(model.members) <= 5
    assert len(log.records) <= 5
    assert model.standardization is not None
    assert "y" in model.standardization.bounds  # target standardized too
    result = predict(model, ds)
    assert len(result.predictions) == 300 - 2 - 1
    assert np.isfinite(result.predictions).all()


def test_train_model_unknown_target():
    ds = generate_planted(0, 200)
    grammar = parse_grammar("<expr> ::= x1[k-<idx>]\n<idx> ::= 0 | 1")
    with pytest.raises(ConfigError, match="target"):
        train_model(
            ds, grammar, window=2, horizon=1, target="zz", mode="real",
            evo_config=quick_config(),
        )


def test_train_model_snapshot_records_config():
    ds = generate_planted(0, 200)
    grammar = parse_grammar("<expr> ::= x1[k-<idx>] | x2[k-<idx>]\n<idx> ::= 0 | 1")
    model, _ = train_model(
        ds, grammar, window=2, horizon=1, target="y", mode="real",
        evo_config=quick_config(rng_seed=9),
    )
    assert model.config_snapshot["rng_seed"] == 9
    assert model.config_snapshot["population_size"] == 30
    assert model.config_snapshot["standardize"] is True
    assert model.rng_seed == 9
