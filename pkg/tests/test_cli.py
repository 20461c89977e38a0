import csv
import json

import numpy as np
import pytest

from conftest import grammar_path
from gevoforecast.cli import main, parse_config_text
from gevoforecast.dataset import load_csv, save_csv
from gevoforecast.errors import ConfigError
from gevoforecast.synth import generate_planted

PLANTED_GRAMMAR = """
<expr> ::= <expr><op><expr> | <cte>*<var> | <var> | <cte>
<op> ::= + | - | * | /
<var> ::= x1[k-<idx>] | x2[k-<idx>]
<idx> ::= 0 | 1
<cte> ::= 0.5 | 2.3 | 1.0
"""


@pytest.fixture
def planted(tmp_path):
    grammar = tmp_path / "planted.bnf"
    grammar.write_text(PLANTED_GRAMMAR)
    data = tmp_path / "train.csv"
    save_csv(generate_planted(0, 300), data)
    config = tmp_path / "run.cfg"
    config.write_text(
        f"""
grammar = {grammar}
train = {data}
model_out = {tmp_path / 'model.json'}
target = y
mode = real
window = 2
horizon = 1
seed = 0
preprocess.standardize = false
evolution.population = 30
evolution.chromosome_length = 20
evolution.generations = 5
"""
    )
    return tmp_path, config


def test_parse_config_text():
    cfg = parse_config_text("a = 1\n# comment\nevolution.population = 200\n\nb=x # tail\n")
    assert cfg == {"a": "1", "evolution.population": "200", "b": "x"}
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("a = 1\nbogus line\n")


def test_train_predict_evaluate(planted, capsys):
    tmp_path, config = planted
    assert main(["train", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert "ensemble train rmse=" in out
    model = tmp_path / "model.json"
    assert model.exists()
    assert (tmp_path / "model.json.runlog.csv").exists()

    preds = tmp_path / "preds.csv"
    assert main(["predict", "--model", str(model), "--data", str(tmp_path / "train.csv"),
                 "--out", str(preds)]) == 0
    with open(preds) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time", "prediction", "actual", "error"]
    assert len(rows) - 1 == 300 - 2 - 1
    t, p, a, e = rows[1]
    assert float(p) - float(a) == pytest.approx(float(e), rel=1e-12)

    assert main(["evaluate", "--model", str(model), "--data", str(tmp_path / "train.csv"),
                 "--folds", "5"]) == 0
    out = capsys.readouterr().out
    fold_lines = [l for l in out.splitlines() if l.startswith("fold ")]
    assert len(fold_lines) == 5
    assert any(l.startswith("folds mean") for l in out.splitlines())


def test_train_byte_identical_for_fixed_seed(planted):
    tmp_path, config = planted
    main(["train", "--config", str(config)])
    first = (tmp_path / "model.json").read_bytes()
    main(["train", "--config", str(config)])
    assert (tmp_path / "model.json").read_bytes() == first


def test_train_missing_binding_errors_before_compute(tmp_path, capsys):
    grammar = tmp_path / "g.bnf"
    grammar.write_text("<expr> ::= PS[k-<idx>] | TS[k-<idx>]\n<idx> ::= 1 | 2")
    data = tmp_path / "d.csv"
    data.write_text("TS\n" + "\n".join(str(20.0 + i) for i in range(50)) + "\n")
    config = tmp_path / "run.cfg"
    config.write_text(
        f"grammar = {grammar}\ntrain = {data}\nmodel_out = {tmp_path/'m.json'}\n"
        "target = TS\nmode = real\nwindow = 3\nhorizon = 1\n"
    )
    assert main(["train", "--config", str(config)]) == 1
    assert "PS" in capsys.readouterr().err


def test_crossval(planted, capsys):
    _, config = planted
    assert main(["crossval", "--config", str(config), "--folds", "3",
                 "--generations", "2"]) == 0
    out = capsys.readouterr().out
    assert len([l for l in out.splitlines() if l.startswith("fold ")]) == 3
    assert "crossval mean rmse=" in out


def test_baseline_arma(tmp_path, capsys):
    from gevoforecast.synth import generate_arma

    ds = generate_arma(0, 1200)
    save_csv(ds.slice(0, 1000), tmp_path / "train.csv")
    save_csv(ds.slice(1000, 1200), tmp_path / "test.csv")
    assert main(["baseline-arma", "--train", str(tmp_path / "train.csv"),
                 "--test", str(tmp_path / "test.csv"), "--column", "y",
                 "--horizon", "3", "--pmax", "2", "--qmax", "2"]) == 0
    out = capsys.readouterr().out
    assert "selected ARMA(" in out
    assert "test rmse=" in out
    table_lines = [l for l in out.splitlines() if l[:1].isdigit()]
    assert len(table_lines) == 8  # 3x3 grid minus (0,0)


def test_synth_command(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["synth", "--profile", "planted", "--seed", "1",
                 "--length", "100", "--out", str(out)]) == 0
    first = out.read_bytes()
    main(["synth", "--profile", "planted", "--seed", "1",
          "--length", "100", "--out", str(out)])
    assert out.read_bytes() == first
    ds = load_csv(out)
    assert ds.n_rows == 100


def test_map_command(capsys):
    path = grammar_path("appendix.bnf")
    assert main(["map", "--grammar", path, "--codons", "21,64,17,62,38,254,2"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert "21 mod 3 = 0" in lines[0]
    assert "64 mod 3 = 1" in lines[1]
    assert lines[-1] == "exp(z)*x"

    assert main(["map", "--grammar", path, "--codons", "2,0"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-1] == "x"

    assert main(["map", "--grammar", path, "--codons", ""]) == 1
    assert main(["map", "--grammar", path, "--codons", "1,300"]) == 1
    assert main(["map", "--grammar", path, "--codons", "1,x"]) == 1


def test_map_invalid_mapping_reported(capsys):
    path = grammar_path("appendix.bnf")
    zeros = ",".join(["0"] * 10)
    assert main(["map", "--grammar", path, "--codons", zeros]) == 0
    assert "INVALID" in capsys.readouterr().out


def test_grammar_check(capsys):
    assert main(["grammar-check", "--grammar", grammar_path("grammar3_cpu.bnf")]) == 0
    out = capsys.readouterr().out
    assert "start symbol: <expr>" in out
    assert "FS, PS, TIN, TS, TpS" in out


def test_exit_codes():
    assert main(["grammar-check", "--grammar", "/does/not/exist.bnf"]) == 2
    assert main(["train", "--config", "/does/not/exist.cfg"]) == 1


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 1


def test_model_file_is_versioned_json(planted):
    tmp_path, config = planted
    main(["train", "--config", str(config)])
    doc = json.loads((tmp_path / "model.json").read_text())
    assert doc["payload"]["format_version"] == 1
    assert "checksum" in doc
