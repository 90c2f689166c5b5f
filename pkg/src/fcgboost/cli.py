"""Command-line experiment runner.

Subcommands:

* ``synth``    generate a synthetic dataset CSV (plus a ``.meta`` sidecar);
* ``fit``      train/validation/test protocol on a CSV or synthetic data,
               writing a model file and a JSON-lines metrics row;
* ``eval``     score a saved model on a CSV file;
* ``compare``  benchmark across one axis (losses, solvers, schemes, k, n),
               emitting a tidy table, metrics rows, and per-iteration traces.

Every metrics row records the seed and a digest of the full configuration, so
re-running the same command reproduces the row exactly.  Relative output paths
are resolved under ``$FCGBOOST_OUT_DIR`` when that variable is set.  A flat
``key = value`` config file may supply defaults for any flag of a subcommand
(flags always win).  Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .boosting import classify, early_stop_grid, FitConfig
from .data import gen_synthetic, load_csv, parse_noise, save_csv, split, test_error
from .dictionary import GAUSS_WIDTH_GRID
from .experiments import (
    DictionarySpec,
    ExperimentData,
    compare_k,
    compare_losses,
    compare_n,
    compare_schemes,
    compare_solvers,
    config_digest,
    run_validated_fit,
    summarize,
    synthetic_splits,
)
from .losses import LOSSES
from .serialize import load_model, save_model
from .solver import AdmmConfig, GdConfig

OUT_DIR_ENV = "FCGBOOST_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_path(name) -> Path:
    path = Path(name)
    if not path.is_absolute():
        base = os.environ.get(OUT_DIR_ENV)
        if base:
            path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_column(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _append_metrics(path, row: dict) -> None:
    with open(_out_path(path), "a", encoding="utf-8") as fh:
        fh.write(json.dumps(row, sort_keys=True) + "\n")
        fh.flush()


def _write_table(path, rows: list[dict], columns: list[str]) -> Path:
    path = _out_path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(col, "")) for col in columns) + "\n")
    return path


def _load_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line {raw.strip()!r} (expected key = value)")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_defaults(parser: argparse.ArgumentParser, values: dict) -> None:
    known = {}
    for action in parser._actions:
        if action.dest in values:
            raw = values[action.dest]
            if isinstance(action.const, bool):
                known[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                known[action.dest] = action.type(raw)
            else:
                known[action.dest] = raw
    parser.set_defaults(**known)


def _add_data_options(p: argparse.ArgumentParser, synthetic_default: bool) -> None:
    g = p.add_argument_group("data source")
    g.add_argument("--data", help="CSV file of numeric features plus a label column")
    g.add_argument("--synthetic", action="store_true", default=synthetic_default,
                   help="generate synthetic data instead of reading a CSV")
    g.add_argument("--m", type=int, default=1000, help="synthetic sample count")
    g.add_argument("--noise", default="none",
                   help="label noise: none, uniform:LEVEL, or outlier:TOL,RATIO")
    g.add_argument("--label-col", default="-1",
                   help="CSV label column (index or header name; default last)")
    g.add_argument("--positive", default="1",
                   help="comma-separated label values mapped to the positive class")
    g.add_argument("--features", default="",
                   help="comma-separated feature columns (default: all but the label)")
    g.add_argument("--split", default="0.5,0.25,0.25",
                   help="train,validation,test fractions")


def _add_dictionary_options(p: argparse.ArgumentParser, default_width_grid: str = "") -> None:
    g = p.add_argument_group("dictionary")
    g.add_argument("--kernel", default="gauss", choices=("gauss", "poly", "sigmoid", "relu"))
    g.add_argument("--width", type=float, default=0.5, help="gauss kernel width")
    g.add_argument("--width-grid", default=default_width_grid,
                   help="comma-separated gauss widths tried on validation "
                        "('auto' for 0.1,0.5,1,5)")
    g.add_argument("--degree", type=int, default=2, help="poly kernel degree")
    g.add_argument("--n-atoms", type=int, default=0,
                   help="dictionary size (default 0: match the training-sample count)")


def _add_fit_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("boosting")
    g.add_argument("--k", default="auto",
                   help="boosting iterations: an integer or 'auto' (validation grid)")
    g.add_argument("--loss", default="squared_hinge", choices=sorted(LOSSES))
    g.add_argument("--selection-rule", default="absolute", choices=("absolute", "signed"))
    g.add_argument("--stall-tol", type=float, default=1e-12)
    s = p.add_argument_group("subproblem solver")
    s.add_argument("--solver-gamma", type=float, default=1.0)
    s.add_argument("--solver-alpha", type=float, default=1.0)
    s.add_argument("--solver-iters", type=int, default=100)
    s.add_argument("--solver-tol", type=float, default=0.0)


def _dictionary_spec(args) -> DictionarySpec:
    grid_text = args.width_grid.strip()
    if grid_text == "auto":
        width_grid = GAUSS_WIDTH_GRID
    elif grid_text:
        width_grid = tuple(_parse_floats(grid_text))
    else:
        width_grid = None
    return DictionarySpec(
        kernel=args.kernel,
        n_atoms=args.n_atoms if args.n_atoms > 0 else None,
        width=args.width,
        degree=args.degree,
        width_grid=width_grid,
    )


def _fit_config(args, k_max: int) -> FitConfig:
    solver = AdmmConfig(gamma=args.solver_gamma, alpha=args.solver_alpha,
                        max_iter=args.solver_iters, tol=args.solver_tol)
    return FitConfig(k_max=k_max, selection_rule=args.selection_rule, loss=args.loss,
                     solver=solver, stall_tol=args.stall_tol)


def _schema(args):
    positive = tuple(_parse_floats(args.positive))
    features = [_parse_column(c) for c in args.features.split(",") if c.strip()] or None
    return _parse_column(args.label_col), positive, features


def _experiment_data(args, seed: int, clean_valid: bool = False) -> ExperimentData:
    if args.data:
        label_col, positive, features = _schema(args)
        data = load_csv(args.data, label_col=label_col, positive_labels=positive,
                        feature_cols=features)
        fractions = tuple(_parse_floats(args.split))
        train, valid, test = split(data, fractions=fractions, seed=seed)
        return ExperimentData(train=train, valid=valid, test=test)
    noise = parse_noise(args.noise)
    return synthetic_splits(args.m, noise, seed, clean_valid=clean_valid)


def _public_config(args, skip=("config", "metrics", "model_out", "out", "table",
                               "trace", "traces_dir")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and k != "func"}


def cmd_synth(args) -> int:
    noise = parse_noise(args.noise)
    data = gen_synthetic(args.m, noise=noise, seed=args.seed)
    digest = config_digest(_public_config(args))
    data.meta["config_digest"] = digest
    out = _out_path(args.out)
    save_csv(data, out)
    print(
        f"synth: wrote {data.m} rows to {out} "
        f"(noise={data.meta['noise']} realized_flip_fraction={data.meta['flip_fraction']:.4f} "
        f"seed={args.seed} digest={digest})"
    )
    return 0


def cmd_fit(args) -> int:
    config = _public_config(args)
    digest = config_digest(config)
    data = _experiment_data(args, args.seed)

    if args.k == "auto":
        k_grid = early_stop_grid(data.train.m)
    else:
        k_grid = [int(args.k)]
    cfg = _fit_config(args, max(k_grid))
    outcome = run_validated_fit(data, _dictionary_spec(args), cfg, k_grid=k_grid,
                                seed=args.seed)

    extra = {
        "config_digest": digest,
        "loss": args.loss,
        "chosen_k": outcome.chosen_k,
        "chosen_width": outcome.chosen_width,
    }
    scale_min = data.train.meta.get("scale_min")
    scale_range = data.train.meta.get("scale_range")
    model_path = _out_path(args.model_out)
    save_model(model_path, outcome.model, outcome.dictionary,
               scale_min=scale_min, scale_range=scale_range, extra=extra)

    if args.trace:
        outcome.trace.write_csv(_out_path(args.trace))

    row = {
        "command": "fit",
        "config_digest": digest,
        "seed": args.seed,
        "rep": 0,
        "test_error": outcome.test_error,
        "accuracy": 1.0 - outcome.test_error,
        "chosen_k": outcome.chosen_k,
        "chosen_width": outcome.chosen_width,
        "validation_error": outcome.validation_error,
        "m_train": data.train.m,
        "dictionary_id": outcome.dictionary.dictionary_id,
    }
    _append_metrics(args.metrics, row)
    print(
        f"fit: test_error={outcome.test_error:.4f} accuracy={1 - outcome.test_error:.4f} "
        f"k={outcome.chosen_k} width={outcome.chosen_width:g} "
        f"model={model_path} seed={args.seed} digest={digest}"
    )
    return 0


def cmd_eval(args) -> int:
    config = _public_config(args)
    digest = config_digest(config)
    bundle = load_model(_out_path(args.model))
    label_col, positive, features = _schema(args)
    data = load_csv(args.data, label_col=label_col, positive_labels=positive,
                    feature_cols=features, scale=False)
    margins = bundle.margins(data.X)
    predictions = classify(margins)
    err = test_error(predictions, data.y)

    row = {
        "command": "eval",
        "config_digest": digest,
        "seed": 0,
        "rep": 0,
        "test_error": err,
        "accuracy": 1.0 - err,
        "m": data.m,
        "dictionary_id": bundle.model.dictionary_id,
        "model_extra": bundle.extra,
    }
    _append_metrics(args.metrics, row)
    print(
        f"eval: test_error={err:.4f} accuracy={1 - err:.4f} m={data.m} "
        f"model={args.model} digest={digest}"
    )
    return 0


def cmd_compare(args) -> int:
    if args.reps <= 0:
        args.reps = 50 if args.data else 20
    config = _public_config(args)
    digest = config_digest(config)
    spec = _dictionary_spec(args)

    def make_data(rep_seed: int) -> ExperimentData:
        # per-iteration selection over thousands of candidate stops needs a
        # noise-free validation curve; the grid protocols keep noisy validation
        return _experiment_data(args, rep_seed, clean_valid=(args.axis == "schemes"))

    def on_row(row: dict) -> None:
        record = {"command": "compare", "axis": args.axis, "config_digest": digest}
        record.update(row)
        _append_metrics(args.metrics, record)

    k_grid = None if args.k_grid == "auto" else [int(v) for v in _parse_floats(args.k_grid)]
    base_cfg = _fit_config(args, 1 if k_grid is None else max(k_grid))

    extra_columns: list[str] = []
    if args.axis == "losses":
        losses = [tok for tok in args.losses.split(",") if tok.strip()] or None
        rows = compare_losses(make_data, spec, base_cfg, losses=losses, reps=args.reps,
                              seed=args.seed, on_row=on_row)
    elif args.axis == "solvers":
        admm_cfg = AdmmConfig(gamma=args.solver_gamma, alpha=args.solver_alpha,
                              max_iter=args.solver_iters, tol=args.solver_tol)
        gd_cfg = GdConfig(max_iter=args.solver_iters)
        rows, traces = compare_solvers(make_data, spec, admm_cfg, gd_cfg, reps=args.reps,
                                       seed=args.seed, on_row=on_row)
        traces_dir = _out_path(args.traces_dir)
        traces_dir.mkdir(parents=True, exist_ok=True)
        for rep, pair in enumerate(traces):
            for name, trace in pair.items():
                trace.write_csv(traces_dir / f"trace_{name}_rep{rep}.csv")
        means = summarize(rows, "objective")
        table = [
            {"cell": cell, "mean_objective": means[cell], "reps": args.reps}
            for cell in means
        ]
        path = _write_table(args.table, table, ["cell", "mean_objective", "reps"])
        print(f"compare solvers: table={path} traces={traces_dir} seed={args.seed} digest={digest}")
        return 0
    elif args.axis == "schemes":
        rows = compare_schemes(make_data, spec, base_cfg, fcg_k_max=args.fcg_iters,
                               baseline_k_max=args.baseline_iters, nu=args.nu, eps=args.eps,
                               reps=args.reps, seed=args.seed, on_row=on_row)
        extra_columns = ["mean_distinct_atoms", "mean_total_steps"]
    elif args.axis == "k":
        rows = compare_k(make_data, spec, base_cfg, k_grid=k_grid, reps=args.reps,
                         seed=args.seed, on_row=on_row)
    elif args.axis == "n":
        n_grid = [int(v) for v in _parse_floats(args.n_grid)]
        rows = compare_n(make_data, spec, base_cfg, n_grid, reps=args.reps, seed=args.seed,
                         on_row=on_row)
    else:  # unreachable behind argparse choices
        raise ValueError(f"unknown axis {args.axis!r}")

    means = summarize(rows, "test_error")
    table = []
    for cell in means:
        entry = {"cell": cell, "mean_test_error": means[cell], "reps": args.reps}
        if args.axis == "schemes":
            cell_rows = [r for r in rows if r["cell"] == cell]
            entry["mean_distinct_atoms"] = float(np.mean([r["distinct_atoms"] for r in cell_rows]))
            entry["mean_total_steps"] = float(np.mean([r["total_steps"] for r in cell_rows]))
        table.append(entry)
    path = _write_table(args.table, table, ["cell", "mean_test_error", "reps"] + extra_columns)
    for entry in table:
        detail = " ".join(f"{k}={v}" for k, v in entry.items() if k != "cell")
        print(f"compare {args.axis}: cell={entry['cell']} {detail} seed={args.seed} digest={digest}")
    print(f"compare {args.axis}: table={path} seed={args.seed} digest={digest}")
    return 0


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="fcgboost", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--config", help="key = value file of flag defaults")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--noise", default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="synthetic.csv")
    p.set_defaults(func=cmd_synth)
    commands["synth"] = p

    p = sub.add_parser("fit", help="fit a boosted classifier and report test metrics")
    p.add_argument("--config", help="key = value file of flag defaults")
    _add_data_options(p, synthetic_default=False)
    _add_dictionary_options(p)
    _add_fit_options(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-out", default="model.npz")
    p.add_argument("--metrics", default="metrics.jsonl")
    p.add_argument("--trace", default="",
                   help="optional CSV path for the per-iteration training trace")
    p.set_defaults(func=cmd_fit)
    commands["fit"] = p

    p = sub.add_parser("eval", help="score a saved model on a CSV file")
    p.add_argument("--config", help="key = value file of flag defaults")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", default="-1")
    p.add_argument("--positive", default="1")
    p.add_argument("--features", default="")
    p.add_argument("--metrics", default="metrics.jsonl")
    p.set_defaults(func=cmd_eval)
    commands["eval"] = p

    p = sub.add_parser("compare", help="benchmark across one experiment axis")
    p.add_argument("--config", help="key = value file of flag defaults")
    p.add_argument("--axis", required=True, choices=("losses", "solvers", "schemes", "k", "n"))
    _add_data_options(p, synthetic_default=True)
    _add_dictionary_options(p)
    _add_fit_options(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=0,
                   help="repetitions per cell (default 0: 20 for synthetic data, "
                        "50 for a CSV source)")
    p.add_argument("--losses", default="", help="cells for --axis losses (default: all)")
    p.add_argument("--k-grid", default="auto", help="cells for --axis k")
    p.add_argument("--n-grid", default="1000,2000,4000", help="cells for --axis n")
    p.add_argument("--fcg-iters", type=int, default=500,
                   help="fully-corrective budget for --axis schemes")
    p.add_argument("--baseline-iters", type=int, default=5000,
                   help="stagewise budget for --axis schemes")
    p.add_argument("--nu", type=float, default=0.1, help="shrinkage factor")
    p.add_argument("--eps", type=float, default=0.01, help="epsilon step size")
    p.add_argument("--table", default="compare.csv")
    p.add_argument("--metrics", default="metrics.jsonl")
    p.add_argument("--traces-dir", default="traces")
    p.set_defaults(func=cmd_compare)
    commands["compare"] = p

    return parser, commands


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()

    if "--config" in argv:
        config_path = argv[argv.index("--config") + 1] if argv.index("--config") + 1 < len(argv) else None
        command = next((tok for tok in argv if tok in commands), None)
        if config_path and command:
            try:
                _apply_config_defaults(commands[command], _load_config_file(config_path))
            except (OSError, ValueError) as exc:
                print(f"fcgboost: cannot use config file: {exc}", file=sys.stderr)
                return 2

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"fcgboost: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
