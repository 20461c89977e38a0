"""Command-line interface: train, predict, evaluate, crossval,
baseline-arma, synth, map, grammar-check.

Configuration is a flat ``key = value`` text file with dotted sections
(e.g. ``evolution.population = 200``); command-line flags override file
values.  Exit codes: 0 ok, 1 usage/config, 2 data error, 3 compute error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Dict, Optional

import numpy as np

from . import arma as arma_mod
from . import model as model_mod
from . import synth
from .dataset import TimeSeriesDataset, fold_bounds, load_csv, save_csv
from .errors import ComputeError, ConfigError, DataError, GevoError
from .evolution import EvolutionConfig
from .fitness import BiasPolicy, mae, rmse
from .genotype import map_genotype
from .grammar import list_variables, load_grammar
from .training import train_model


def parse_config_text(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(path: Optional[str]) -> Dict[str, str]:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None


def _get_bool(cfg: Dict[str, str], key: str, default: bool) -> bool:
    raw = cfg.get(key)
    if raw is None:
        return default
    if raw.lower() in ("true", "yes", "1", "on"):
        return True
    if raw.lower() in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"config key {key}: expected a boolean, got {raw!r}")


def _get_number(cfg: Dict[str, str], key: str, default, cast):
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"config key {key}: cannot parse {raw!r}") from None


def evolution_config_from(cfg: Dict[str, str], args) -> EvolutionConfig:
    mutation = cfg.get("evolution.mutation")
    return EvolutionConfig(
        population_size=_get_number(cfg, "evolution.population", 200, int),
        chromosome_length=_get_number(cfg, "evolution.chromosome_length", 100, int),
        crossover_prob=_get_number(cfg, "evolution.crossover", 0.9, float),
        mutation_prob=float(mutation) if mutation is not None else None,
        max_wraps=_get_number(cfg, "evolution.max_wraps", 3, int),
        tournament_size=_get_number(cfg, "evolution.tournament", 2, int),
        generations=(
            args.generations
            if getattr(args, "generations", None) is not None
            else _get_number(cfg, "evolution.generations", 2000, int)
        ),
        rng_seed=(
            args.seed if getattr(args, "seed", None) is not None else _get_number(cfg, "seed", 0, int)
        ),
        rog_mode=cfg.get("evolution.rog", "2-RO"),
        sdt_mode=cfg.get("evolution.sdt", "packing"),
        packing_keep_fraction=_get_number(cfg, "evolution.packing_keep", 0.05, float),
        stagnation_window=_get_number(cfg, "evolution.stagnation_window", 500, int),
        target_fitness=_get_number(cfg, "evolution.target_fitness", None, float),
    )


def bias_from(cfg: Dict[str, str]) -> Optional[BiasPolicy]:
    if not _get_bool(cfg, "bias.enabled", False):
        return None
    groups_raw = cfg.get("bias.groups", "PS;FS;TIN")
    groups = [
        {name.strip() for name in group.split(",") if name.strip()}
        for group in groups_raw.split(";")
        if group.strip()
    ]
    return BiasPolicy(groups, _get_number(cfg, "bias.factor", 2.0, float))


def bindings_from(cfg: Dict[str, str]) -> Dict[str, str]:
    return {
        key[len("bind."):]: value for key, value in cfg.items() if key.startswith("bind.")
    }


def smooth_from(cfg: Dict[str, str]) -> Dict[str, int]:
    prefix = "preprocess.smooth."
    out = {}
    for key, value in cfg.items():
        if key.startswith(prefix):
            out[key[len(prefix):]] = _get_number({key: value}, key, 5, int)
    return out


def _require(cfg: Dict[str, str], args, name: str, flag: str) -> str:
    value = getattr(args, flag, None)
    if value is None:
        value = cfg.get(name)
    if value is None:
        raise ConfigError(f"missing required setting {name!r} (config key or --{flag})")
    return value


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    fitness_kind = cfg.get("fitness", "rmse")
    if fitness_kind != "rmse":
        raise ConfigError(f"unsupported fitness {fitness_kind!r}; only rmse is available")
    grammar = load_grammar(_require(cfg, args, "grammar", "grammar"))
    train_path = _require(cfg, args, "train", "train")
    out_path = _require(cfg, args, "model_out", "out")
    target = _require(cfg, args, "target", "target")
    mode = args.mode or cfg.get("mode", "mixed")
    window = args.window if args.window is not None else _get_number(cfg, "window", 20, int)
    horizon = args.horizon if args.horizon is not None else _get_number(cfg, "horizon", 6, int)
    evo = evolution_config_from(cfg, args)
    raw = load_csv(train_path)
    model, log = train_model(
        raw,
        grammar,
        window=window,
        horizon=horizon,
        target=target,
        mode=mode,
        bindings=bindings_from(cfg),
        smooth=smooth_from(cfg),
        apply_standardization=_get_bool(cfg, "preprocess.standardize", True),
        evo_config=evo,
        bias=bias_from(cfg),
        ensemble_size=_get_number(cfg, "ensemble", 5, int),
    )
    model_mod.save(model, out_path)
    runlog_path = args.runlog or cfg.get("runlog_out", out_path + ".runlog.csv")
    log.write_csv(runlog_path)
    result = model_mod.predict(model, raw)
    metrics = result.metrics()
    print(f"model written to {out_path}")
    print(f"run log written to {runlog_path}")
    print("members (training fitness, phenotype):")
    for text, fit in model.members:
        print(f"  {fit:.6g}  {text}")
    print(f"ensemble train rmse={metrics['rmse']:.6g} mae={metrics['mae']:.6g}")
    return 0


def cmd_predict(args) -> int:
    model = model_mod.load(args.model)
    raw = load_csv(args.data)
    result = model_mod.predict(model, raw)
    rows = zip(result.times, result.predictions, result.actuals)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["time", "prediction", "actual", "error"])
        for t, p, a in rows:
            writer.writerow([int(t), repr(float(p)), repr(float(a)), repr(float(p - a))])
    finally:
        if args.out:
            out.close()
    if result.flagged.any():
        print(f"warning: {int(result.flagged.sum())} step(s) fell back to persistence", file=sys.stderr)
    return 0


def _evaluate_block(model, ds: TimeSeriesDataset):
    result = model_mod.predict(model, ds)
    return result.metrics()


def cmd_evaluate(args) -> int:
    model = model_mod.load(args.model)
    raw = load_csv(args.data)
    metrics = _evaluate_block(model, raw)
    print(f"ensemble rmse={metrics['rmse']:.6g} mae={metrics['mae']:.6g} flagged={metrics['flagged']}")
    for text, fit in model.members:
        single = model_mod.TrainedModel(
            members=[(text, fit)],
            spec=model.spec,
            standardization=model.standardization,
            bindings=model.bindings,
            smooth=model.smooth,
        )
        m = _evaluate_block(single, raw)
        print(f"member rmse={m['rmse']:.6g} mae={m['mae']:.6g} {text}")
    if args.folds:
        values = []
        for i, (start, stop) in enumerate(fold_bounds(raw.n_rows, args.folds), start=1):
            m = _evaluate_block(model, raw.slice(start, stop))
            values.append((m["rmse"], m["mae"]))
            print(f"fold {i} rmse={m['rmse']:.6g} mae={m['mae']:.6g}")
        arr = np.array(values)
        print(
            f"folds mean rmse={arr[:,0].mean():.6g} +- {arr[:,0].std():.6g} "
            f"mae={arr[:,1].mean():.6g} +- {arr[:,1].std():.6g}"
        )
    return 0


def cmd_crossval(args) -> int:
    cfg = load_config(args.config)
    grammar = load_grammar(_require(cfg, args, "grammar", "grammar"))
    data_path = _require(cfg, args, "train", "train")
    target = _require(cfg, args, "target", "target")
    mode = args.mode or cfg.get("mode", "mixed")
    window = args.window if args.window is not None else _get_number(cfg, "window", 20, int)
    horizon = args.horizon if args.horizon is not None else _get_number(cfg, "horizon", 6, int)
    raw = load_csv(data_path)
    evo = evolution_config_from(cfg, args)
    values = []
    for i, (start, stop) in enumerate(fold_bounds(raw.n_rows, args.folds), start=1):
        held_out = raw.slice(start, stop)
        rest = {
            name: np.concatenate([col[:start], col[stop:]]) for name, col in raw.columns.items()
        }
        train_ds = TimeSeriesDataset(rest, raw.sample_interval)
        model, _ = train_model(
            train_ds,
            grammar,
            window=window,
            horizon=horizon,
            target=target,
            mode=mode,
            bindings=bindings_from(cfg),
            smooth=smooth_from(cfg),
            apply_standardization=_get_bool(cfg, "preprocess.standardize", True),
            evo_config=evo,
            bias=bias_from(cfg),
            ensemble_size=_get_number(cfg, "ensemble", 5, int),
        )
        m = _evaluate_block(model, held_out)
        values.append((m["rmse"], m["mae"]))
        print(f"fold {i} rmse={m['rmse']:.6g} mae={m['mae']:.6g}")
    arr = np.array(values)
    print(
        f"crossval mean rmse={arr[:,0].mean():.6g} +- {arr[:,0].std():.6g} "
        f"mae={arr[:,1].mean():.6g} +- {arr[:,1].std():.6g}"
    )
    return 0


def cmd_baseline_arma(args) -> int:
    train_ds = load_csv(args.train)
    test_ds = load_csv(args.test)
    column = args.column or list(train_ds.columns)[0]
    train_series = train_ds.column(column)
    test_series = test_ds.column(column)
    model, table = arma_mod.identify_with_table(train_series, args.pmax, args.qmax)
    print("p,q,variance,fpe")
    for row in table:
        print(f"{row.p},{row.q},{row.variance:.8g},{row.fpe:.8g}")
    print(f"selected ARMA({model.p},{model.q}) fpe={arma_mod.fpe(model):.8g}")
    full = np.concatenate([train_series, test_series])
    times, preds = arma_mod.rolling_forecast(model, full, args.horizon, start=len(train_series))
    actual = full[times]
    err = preds - actual
    print(f"test rmse={rmse(err):.6g} mae={mae(err):.6g}")
    return 0


def cmd_synth(args) -> int:
    ds = synth.generate(args.profile, args.seed, args.length, args.noise)
    save_csv(ds, args.out)
    print(f"{args.profile} trace with {ds.n_rows} rows written to {args.out}")
    return 0


def cmd_map(args) -> int:
    grammar = load_grammar(args.grammar)
    try:
        codons = [int(c) for c in args.codons.split(",") if c.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse codon list {args.codons!r}") from None
    if not codons:
        raise ConfigError("empty codon list")
    if any(c < 0 or c > 255 for c in codons):
        raise ConfigError("codons must be in [0, 255]")
    result = map_genotype(np.array(codons, dtype=np.uint8), grammar, args.max_wraps, trace=True)
    for step in result.trace:
        if step.codon is None:
            print(f"<{step.rule}> has 1 choice -> {step.choice_text}")
        else:
            print(
                f"codon[{step.codon_index}]={step.codon} | <{step.rule}>: "
                f"{step.codon} mod {step.n_choices} = {step.choice} -> {step.choice_text}"
            )
    print(f"codons consumed: {result.codons_consumed}, wraps used: {result.wraps_used}")
    if result.invalid:
        print("INVALID: nonterminals remained after the wrap limit")
        return 0
    print(result.phenotype)
    return 0


def cmd_grammar_check(args) -> int:
    grammar = load_grammar(args.grammar)
    print(f"start symbol: <{grammar.start}>")
    print(f"{len(grammar.rules)} rules, {len(grammar.nonterminals)} nonterminals, "
          f"{len(grammar.terminals)} terminals")
    for lhs in grammar.rules:
        print(f"  <{lhs}>: {grammar.choice_count(lhs)} choice(s)")
    names = sorted(v.identifier for v in list_variables(grammar))
    print("variables: " + (", ".join(names) if names else "(none)"))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gevoforecast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config and CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--grammar", default=None)
    p.add_argument("--train", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--runlog", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--mode", default=None, choices=["real", "predictive", "mixed"])
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a saved model to a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="report metrics of a saved model on a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("crossval", help="k-fold cross-validated training")
    p.add_argument("--config", default=None)
    p.add_argument("--grammar", default=None)
    p.add_argument("--train", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--mode", default=None, choices=["real", "predictive", "mixed"])
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("baseline-arma", help="FPE-identified ARMA baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--column", default=None)
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--pmax", type=int, default=10)
    p.add_argument("--qmax", type=int, default=10)
    p.set_defaults(func=cmd_baseline_arma)

    p = sub.add_parser("synth", help="generate a synthetic trace CSV")
    p.add_argument("--profile", required=True,
                   choices=["thermal-cpu", "thermal-inlet", "arma", "planted"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("map", help="print a genotype-to-phenotype derivation trace")
    p.add_argument("--grammar", required=True)
    p.add_argument("--codons", required=True, help="comma-separated codon values")
    p.add_argument("--max-wraps", type=int, default=3)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("grammar-check", help="parse a grammar and print a summary")
    p.add_argument("--grammar", required=True)
    p.set_defaults(func=cmd_grammar_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ComputeError, GevoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
