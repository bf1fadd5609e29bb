"""Command-line entry point: ingest, synth, eval, sweep, asymptotic.

Batch in, files out.  Flag values override JSON config-file values, which
override built-in defaults; the effective configuration is echoed into every
JSON report.  Output files are written atomically (temp file + rename).
Exit codes: 0 success, 2 input/config error, 3 evaluation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import dataio, evaluation, synth
from .dataio import MalformedCsv, UnknownColumn
from .graph import GlobalEpsilon, SelfTuningEpsilon
from .plaplace import SolverConfig

DATASET_FILTERS = {"male": ("gender", "M"), "female": ("gender", "F"), "combined": (None, None)}

DEFAULT_ASYMPTOTIC_P = (2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 300.0, 1000.0, math.inf)


class _InputError(Exception):
    """Maps to exit code 2."""


class _RunError(Exception):
    """Maps to exit code 3."""


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _parse_p(text: str) -> float:
    if str(text).strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _parse_p_list(text: str) -> tuple[float, ...]:
    return tuple(_parse_p(tok) for tok in str(text).split(","))

def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in str(text).split(","))


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in str(text).split(","))


def _parse_eps_mode(text: str):
    t = str(text).strip().lower()
    if t == "selftuning":
        return SelfTuningEpsilon()
    if t.startswith("selftuning:"):
        return SelfTuningEpsilon(k_scale=int(t.split(":", 1)[1]))
    if t.startswith("global:"):
        return GlobalEpsilon(eps=float(t.split(":", 1)[1]))
    raise ValueError(f"eps-mode must be 'selftuning', 'selftuning:<k>' or 'global:<eps>', got {text!r}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise _InputError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise _InputError(f"config file {path} must hold a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, config: dict, name: str, default):
    """Flag value if given, else config-file value, else default."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    if name in config:
        return config[name]
    return default


def _load_table(args, config) -> tuple[dataio.FeatureTable, str, dict]:
    input_path = _resolve(args, config, "input", None)
    schema_path = _resolve(args, config, "schema", None)
    dataset = _resolve(args, config, "dataset", "combined")
    if input_path is None or schema_path is None:
        raise _InputError("--input and --schema are required")
    if dataset not in DATASET_FILTERS:
        raise _InputError(f"--dataset must be one of {sorted(DATASET_FILTERS)}, got {dataset!r}")
    try:
        schema = dataio.load_schema(schema_path)
        table = dataio.load_csv(input_path, schema)
        table = dataio.drop_incomplete(table)
        column, value = DATASET_FILTERS[dataset]
        table = dataio.filter_dataset(table, column, value)
    except (OSError, MalformedCsv, UnknownColumn, dataio.EmptyAfterCleaning) as exc:
        raise _InputError(str(exc)) from exc
    meta = {"input": str(input_path), "schema": str(schema_path), "dataset": dataset, "rows": table.n_rows}
    return table, dataset, meta


def _out_dir(args, config) -> Path:
    out = _resolve(args, config, "out", None)
    if out is None:
        raise _InputError("--out is required")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_ingest(args: argparse.Namespace, config: dict) -> int:
    input_path = _resolve(args, config, "input", None)
    schema_path = _resolve(args, config, "schema", None)
    if input_path is None or schema_path is None:
        raise _InputError("--input and --schema are required")
    try:
        schema = dataio.load_schema(schema_path)
        raw = dataio.load_csv(input_path, schema)
        missing = dataio.missing_counts(raw)
        cleaned = dataio.drop_incomplete(raw)
    except (OSError, MalformedCsv, UnknownColumn, dataio.EmptyAfterCleaning) as exc:
        raise _InputError(str(exc)) from exc
    out = _out_dir(args, config)

    per_dataset = {}
    for name, (column, value) in DATASET_FILTERS.items():
        if column is None or column in cleaned.categorical:
            per_dataset[name] = dataio.filter_dataset(cleaned, column, value).n_rows
    summary = {
        "input": str(input_path),
        "rows_before": raw.n_rows,
        "rows_after": cleaned.n_rows,
        "missing_per_column": missing,
        "dataset_counts": per_dataset,
    }
    cleaned_path = out / "cleaned.csv"
    dataio.write_csv(cleaned, cleaned_path)
    _write_atomic(out / "summary.json", _json_text(summary))
    print(f"ingest: {raw.n_rows} rows in, {cleaned.n_rows} complete rows out -> {cleaned_path}")
    return 0


def cmd_synth(args: argparse.Namespace, config: dict) -> int:
    out = _resolve(args, config, "out", None)
    if out is None:
        raise _InputError("--out is required")
    structure_name = _resolve(args, config, "structure", "blobs")
    target_name = _resolve(args, config, "target_fn", "smooth")
    try:
        if structure_name == "blobs":
            structure = synth.GaussianBlobs(
                centers=int(_resolve(args, config, "blob_centers", 3)),
                spread=float(_resolve(args, config, "blob_spread", 1.0)),
            )
        elif structure_name == "curve":
            structure = synth.ManifoldCurve(ambient_noise=float(_resolve(args, config, "curve_noise", 0.05)))
        else:
            raise ValueError(f"--structure must be 'blobs' or 'curve', got {structure_name!r}")
        target_fn = {"smooth": synth.SmoothNonlinear(), "linear": synth.LinearCombo()}.get(target_name)
        if target_fn is None:
            raise ValueError(f"--target-fn must be 'smooth' or 'linear', got {target_name!r}")
        spec = synth.SynthSpec(
            n=int(_resolve(args, config, "n", 500)),
            dim=int(_resolve(args, config, "dim", 10)),
            structure=structure,
            target_fn=target_fn,
            noise_sd=float(_resolve(args, config, "noise_sd", 0.0)),
            seed=int(_resolve(args, config, "seed", 0)),
        )
        table = synth.generate(spec)
    except (ValueError, TypeError) as exc:
        raise _InputError(str(exc)) from exc

    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_csv(table, out_path)
    schema_out = _resolve(args, config, "schema_out", str(out_path) + ".schema.json")
    _write_atomic(Path(schema_out), _json_text(dataio.schema_of(table)))
    print(f"synth: wrote {table.n_rows} rows x {table.n_features} features -> {out_path}")
    return 0


def _print_report_table(reports: list[evaluation.EvalReport]) -> None:
    print(f"{'model':<10} {'target':<10} {'dataset':<9} {'train%':>7} {'rmse_mean':>10} {'rmse_std':>9} {'nonconv':>8}")
    for r in reports:
        print(
            f"{r.model:<10} {r.target:<10} {r.dataset:<9} {r.training_pct:>7.4g} "
            f"{r.rmse_mean:>10.4f} {r.rmse_std:>9.4f} {r.nonconverged_count:>8}"
        )


def cmd_eval(args: argparse.Namespace, config: dict) -> int:
    table, dataset, meta = _load_table(args, config)
    out = _out_dir(args, config)
    target = _resolve(args, config, "target", synth.TARGET_COLUMN)
    model = _resolve(args, config, "model", "plaplace")
    folds = int(_resolve(args, config, "folds", 5))
    mode = _resolve(args, config, "fold_mode", evaluation.STANDARD)
    repeats = int(_resolve(args, config, "repeats", 10))
    seed = int(_resolve(args, config, "seed", 0))

    effective = dict(meta, target=target, model=model, folds=folds, fold_mode=mode, repeats=repeats, seed=seed)
    try:
        fold_spec = evaluation.FoldSpec(k=folds, mode=mode)
        if model == "plaplace":
            p = _parse_p(_resolve(args, config, "p", 2.0))
            k = int(_resolve(args, config, "k", 10))
            eps_mode = _parse_eps_mode(_resolve(args, config, "eps_mode", "selftuning"))
            effective.update(p="inf" if math.isinf(p) else p, k=k, eps_mode=str(eps_mode))
            report = evaluation.run_plaplace_eval(
                table, target, evaluation.GraphConfig(k=k, eps_mode=eps_mode),
                SolverConfig(p=p, tol=float(_resolve(args, config, "tol", 1e-6))),
                fold_spec, repeats, seed, dataset=dataset,
            )
        elif model in ("ridge", "polyridge", "lssvr"):
            model_spec = {"model": model}
            for key, flag in (("lambda", "lam"), ("degree", "degree"), ("gamma", "gamma"), ("c", "c")):
                v = _resolve(args, config, flag, None)
                if v is not None:
                    model_spec[key] = v
            effective.update(model_spec)
            report = evaluation.run_baseline_eval(table, target, model_spec, fold_spec, repeats, seed, dataset=dataset)
        else:
            raise _InputError(f"--model must be plaplace|ridge|polyridge|lssvr, got {model!r}")
    except _InputError:
        raise
    except Exception as exc:
        raise _RunError(f"{type(exc).__name__}: {exc}") from exc

    _write_atomic(out / "report.json", _json_text({"config": effective, "reports": [report.to_dict()]}))
    _write_atomic(out / "report.csv", evaluation.reports_csv([report]))
    _print_report_table([report])
    return 0


def cmd_sweep(args: argparse.Namespace, config: dict) -> int:
    table, dataset, meta = _load_table(args, config)
    out = _out_dir(args, config)
    target = _resolve(args, config, "target", synth.TARGET_COLUMN)
    p_grid = _parse_p_list(_resolve(args, config, "grid_p", "2,2.5,3,3.5,4,4.5,5,5.5,6,6.5,7,7.5,8,8.5,9,9.5,10"))
    k_grid = _parse_int_list(_resolve(args, config, "grid_k", "10,15,20,25,30,35,40,45,50,55,60"))
    pcts = _parse_float_list(_resolve(args, config, "grid_train_pct", "5,10,20,25,33,50,80"))
    repeats = int(_resolve(args, config, "repeats", 10))
    seed = int(_resolve(args, config, "seed", 0))
    effective = dict(
        meta, target=target, grid_p=["inf" if math.isinf(p) else p for p in p_grid],
        grid_k=list(k_grid), grid_train_pct=list(pcts), repeats=repeats, seed=seed,
    )
    try:
        eps_mode = _parse_eps_mode(_resolve(args, config, "eps_mode", "selftuning"))
        result = evaluation.sweep(
            table, target, p_grid=p_grid, k_grid=k_grid, training_pcts=pcts,
            repeats=repeats, seed=seed, eps_mode=eps_mode, dataset=dataset,
        )
    except Exception as exc:
        raise _RunError(f"{type(exc).__name__}: {exc}") from exc

    _write_atomic(out / "sweep.csv", evaluation.reports_csv(result.reports))
    _write_atomic(out / "optima.csv", evaluation.optima_csv(result.optima))
    _write_atomic(
        out / "sweep.json",
        _json_text({"config": effective, "reports": [r.to_dict() for r in result.reports]}),
    )
    print(evaluation.optima_csv(result.optima), end="")
    return 0


def cmd_asymptotic(args: argparse.Namespace, config: dict) -> int:
    table, dataset, meta = _load_table(args, config)
    out = _out_dir(args, config)
    target = _resolve(args, config, "target", synth.TARGET_COLUMN)
    k_list = _parse_int_list(_resolve(args, config, "grid_k", "10,30,50"))
    p_raw = _resolve(args, config, "grid_p", None)
    p_list = DEFAULT_ASYMPTOTIC_P if p_raw is None else _parse_p_list(p_raw)
    pct = float(_resolve(args, config, "train_pct", 20.0))
    repeats = int(_resolve(args, config, "repeats", 1))
    seed = int(_resolve(args, config, "seed", 0))
    effective = dict(
        meta, target=target, grid_k=list(k_list),
        grid_p=["inf" if math.isinf(p) else p for p in p_list],
        train_pct=pct, repeats=repeats, seed=seed,
    )
    try:
        eps_mode = _parse_eps_mode(_resolve(args, config, "eps_mode", "selftuning"))
        series = evaluation.asymptotic_study(
            table, target, k_list=k_list, p_list=p_list, training_pct=pct,
            repeats=repeats, seed=seed, eps_mode=eps_mode,
        )
    except Exception as exc:
        raise _RunError(f"{type(exc).__name__}: {exc}") from exc

    for s in series:
        lines = ["p,rmse_mean"]
        for p, rm in zip(s.p_values, s.rmse_mean):
            lines.append(f"{'inf' if math.isinf(p) else format(p, '.6g')},{rm:.12g}")
        _write_atomic(out / f"asymptotic_k{s.k}.csv", "\n".join(lines) + "\n")
        print(f"k={s.k}: rmse_gap={s.rmse_gap:.4g} u_gap_inf={s.u_gap_inf:.4g} converged={s.converged}")
    _write_atomic(
        out / "asymptotic.json",
        _json_text({"config": effective, "series": [s.to_dict() for s in series]}),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plapreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out", help="output directory (or file for synth)")
        p.add_argument("--seed", type=int, help="master seed (default 0)")

    p_ingest = sub.add_parser("ingest", help="load, clean and summarize a CSV dataset")
    p_ingest.add_argument("--input", help="CSV file")
    p_ingest.add_argument("--schema", help="JSON column-role map")
    add_common(p_ingest)

    p_synth = sub.add_parser("synth", help="generate a synthetic CSV dataset")
    p_synth.add_argument("--n", type=int, help="row count (default 500)")
    p_synth.add_argument("--dim", type=int, help="feature count (default 10)")
    p_synth.add_argument("--noise-sd", dest="noise_sd", type=float, help="target noise sd (default 0)")
    p_synth.add_argument("--structure", choices=["blobs", "curve"], help="feature layout (default blobs)")
    p_synth.add_argument("--target-fn", dest="target_fn", choices=["smooth", "linear"], help="target map (default smooth)")
    p_synth.add_argument("--blob-centers", dest="blob_centers", type=int, help="number of blobs (default 3)")
    p_synth.add_argument("--blob-spread", dest="blob_spread", type=float, help="intra-blob sd (default 1)")
    p_synth.add_argument("--schema-out", dest="schema_out", help="schema JSON path (default <out>.schema.json)")
    add_common(p_synth)

    def add_data(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", help="CSV file")
        p.add_argument("--schema", help="JSON column-role map")
        p.add_argument("--dataset", choices=sorted(DATASET_FILTERS), help="row filter (default combined)")
        p.add_argument("--target", help="target column name (default 'target')")

    p_eval = sub.add_parser("eval", help="evaluate one model configuration")
    add_data(p_eval)
    p_eval.add_argument("--model", choices=["plaplace", "ridge", "polyridge", "lssvr"])
    p_eval.add_argument("--p", help="p in [2, inf] for plaplace (default 2)")
    p_eval.add_argument("--k", type=int, help="graph neighbors for plaplace (default 10)")
    p_eval.add_argument("--eps-mode", dest="eps_mode", help="selftuning | selftuning:<k> | global:<eps>")
    p_eval.add_argument("--tol", type=float, help="solver tolerance (default 1e-6)")
    p_eval.add_argument("--folds", type=int, help="fold count K (default 5)")
    p_eval.add_argument("--fold-mode", dest="fold_mode", choices=[evaluation.STANDARD, evaluation.MODIFIED])
    p_eval.add_argument("--repeats", type=int, help="independent runs (default 10)")
    p_eval.add_argument("--lambda", dest="lam", type=float, help="ridge penalty")
    p_eval.add_argument("--degree", type=int, help="polynomial degree (1-3)")
    p_eval.add_argument("--gamma", type=float, help="LSSVR kernel width")
    p_eval.add_argument("--c", type=float, help="LSSVR regularization")
    add_common(p_eval)

    p_sweep = sub.add_parser("sweep", help="grid-evaluate the graph solver over p, k, training %")
    add_data(p_sweep)
    p_sweep.add_argument("--grid-p", dest="grid_p", help="comma list of p values ('inf' allowed)")
    p_sweep.add_argument("--grid-k", dest="grid_k", help="comma list of k values")
    p_sweep.add_argument("--grid-train-pct", dest="grid_train_pct", help="comma list of training percentages")
    p_sweep.add_argument("--eps-mode", dest="eps_mode")
    p_sweep.add_argument("--repeats", type=int)
    add_common(p_sweep)

    p_asym = sub.add_parser("asymptotic", help="RMSE-vs-p series at fixed training %")
    add_data(p_asym)
    p_asym.add_argument("--grid-k", dest="grid_k", help="comma list of k values (default 10,30,50)")
    p_asym.add_argument("--grid-p", dest="grid_p", help="ascending comma list of p ending in inf")
    p_asym.add_argument("--train-pct", dest="train_pct", type=float, help="training percentage (default 20)")
    p_asym.add_argument("--eps-mode", dest="eps_mode")
    p_asym.add_argument("--repeats", type=int)
    add_common(p_asym)

    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "asymptotic": cmd_asymptotic,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load_config(getattr(args, "config", None))
        return COMMANDS[args.command](args, config)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
