"""Command-line surface: train, predict, evaluate, importance, ablate,
remove-features, and synth subcommands.

Exit codes: 0 success, 1 runtime or data error, 2 usage or configuration
error. Output files are written atomically and contain no timestamps, so a
fixed seed gives byte-identical outputs across runs.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import datetime as dt
import io
import os
import sys

from . import fusion, importance as importance_mod
from .config import KEY_SPECS, RunConfig, parse_config_file, parse_value
from .errors import AttnBoostError, ConfigError, DataError, ModelFormatError
from .experiments import (
    MANUAL_WEIGHT_FEATURES,
    REMOVAL_FEATURES,
    fingerprint_of,
    generate_synthetic,
    result_to_csv,
    run_ablation,
    run_feature_removal,
)
from .metrics import CSV_HEADER, evaluate_scores, format_reports, metrics_csv_row
from .model_io import load_model, save_model, write_text_atomic
from .tabular import (
    RETAIL_IDENTIFIER_COLUMNS,
    PreprocessorState,
    RawTable,
    apply_preprocessor,
    fit_preprocessor,
    load_csv,
    retail_schema,
    stratified_split,
)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def table_to_csv_text(table: RawTable) -> str:
    buf = io.StringIO()
    writer = csv_mod.writer(buf, lineterminator="\n")
    writer.writerow([c.name for c in table.schema])
    for row in table.rows:
        writer.writerow([_format_cell(v) for v in row])
    return buf.getvalue()


def _dest(key: str) -> str:
    return key.replace(".", "_")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file of key=value lines")
    for key, (kind, default) in KEY_SPECS.items():
        parser.add_argument(
            f"--{key}",
            dest=_dest(key),
            type=kind,
            default=None,
            help=f"(default {default!r})",
            metavar="V",
        )
    parser.add_argument(
        "--synth.coef",
        dest="synth_coef",
        action="append",
        metavar="NAME=VALUE",
        help="planted coefficient for a generated feature; repeatable",
    )


def _add_source_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="input CSV with the retail column schema")
    parser.add_argument(
        "--synthetic",
        nargs="?",
        const="",
        default=None,
        metavar="SPECFILE",
        help="use generated data; optional config file of synth.* keys",
    )


def _cli_values(args) -> dict:
    values = {}
    for key in KEY_SPECS:
        value = getattr(args, _dest(key), None)
        if value is not None:
            values[key] = value
    for item in getattr(args, "synth_coef", None) or []:
        name, sep, text = item.partition("=")
        if not sep:
            raise ConfigError(f"--synth.coef expects NAME=VALUE, got {item!r}")
        key = f"synth.coef.{name.strip()}"
        values[key] = parse_value(key, text.strip())
    return values


def _merged_config(args) -> RunConfig:
    file_values = parse_config_file(args.config) if getattr(args, "config", None) else {}
    synthetic = getattr(args, "synthetic", None)
    if synthetic:
        file_values.update(parse_config_file(synthetic))
    return RunConfig.merged(file_values, _cli_values(args))


def _schema_for_csv(path: str):
    """Retail-schema subset matching the file's header, in canonical order."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            header = next(csv_mod.reader(handle), None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if header is None:
        raise DataError(f"{path}: file is empty, header row required")
    known = {c.name: c for c in retail_schema()}
    unknown = sorted(set(header) - set(known))
    if unknown:
        raise DataError(f"{path}: columns not in the retail schema: {unknown}")
    present = set(header)
    return [c for c in retail_schema() if c.name in present]


def _resolve_table(args, cfg: RunConfig) -> RawTable:
    has_data = getattr(args, "data", None) is not None
    has_synth = getattr(args, "synthetic", None) is not None
    if has_data == has_synth:
        raise ConfigError("exactly one of --data or --synthetic is required")
    if has_data:
        return load_csv(args.data, _schema_for_csv(args.data))
    return generate_synthetic(cfg.synthetic_spec())


def _default_drop(table: RawTable, cfg: RunConfig) -> list[str]:
    configured = cfg.drop_columns()
    if configured is not None:
        return configured
    names = {c.name for c in table.schema}
    return [c for c in RETAIL_IDENTIFIER_COLUMNS if c in names]


def _manual_weights(cfg: RunConfig, state: PreprocessorState) -> dict[str, float]:
    configured = cfg.manual_weights()
    if configured is not None:
        return configured
    return {
        name: fusion.DEFAULT_MANUAL_FACTOR
        for name in MANUAL_WEIGHT_FEATURES
        if name in state.feature_names
    }


def _load_for_model(path: str, state: PreprocessorState) -> RawTable:
    """Load a CSV against the fit-time schema; the target column may be absent."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            header = next(csv_mod.reader(handle), None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if header is None:
        raise DataError(f"{path}: file is empty, header row required")
    if state.target_name in header:
        schema = state.schema
    else:
        schema = [c for c in state.schema if c.kind != "binary-target"]
    return load_csv(path, schema)


def cmd_train(args) -> int:
    cfg = _merged_config(args)
    table = _resolve_table(args, cfg)
    state = fit_preprocessor(table, _default_drop(table, cfg))
    X, y = apply_preprocessor(state, table)
    if y is None:
        raise DataError("training data must include the target column")
    split = stratified_split(X, y, cfg["split.fraction"], cfg["split.seed"])
    variant = cfg["model.variant"]
    model = fusion.fit_variant(
        variant,
        split.X_train,
        split.y_train,
        cfg.attention_config(),
        cfg.boost_config(),
        augment_mode=cfg["model.augment_mode"],
        manual_weights=_manual_weights(cfg, state),
        shallow_k=cfg["model.shallow_k"],
        preprocessor=state,
    )
    train_proba, _ = fusion.predict_matrix(model, split.X_train)
    test_proba, _ = fusion.predict_matrix(model, split.X_test)
    reports = [
        ("train", evaluate_scores(train_proba, split.y_train)),
        ("test", evaluate_scores(test_proba, split.y_test)),
    ]
    save_model(model, args.out, fingerprint=fingerprint_of(cfg.fingerprint_parts()))
    print(f"variant: {variant}")
    print(format_reports(reports))
    print(f"model written to {args.out}")
    if args.metrics_out:
        rows = "\n".join(metrics_csv_row(name, r) for name, r in reports)
        write_text_atomic(args.metrics_out, f"{CSV_HEADER}\n{rows}\n")
    if args.test_out:
        test_rows = [table.rows[i] for i in split.test_indices]
        write_text_atomic(args.test_out, table_to_csv_text(RawTable(table.schema, test_rows)))
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if model.preprocessor is None:
        raise ModelFormatError("model file has no preprocessor section")
    table = _load_for_model(args.data, model.preprocessor)
    proba, labels = fusion.predict(model, table)
    lines = ["row_index,probability,label"]
    lines.extend(f"{i},{repr(float(p))},{int(l)}" for i, (p, l) in enumerate(zip(proba, labels)))
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    if model.preprocessor is None:
        raise ModelFormatError("model file has no preprocessor section")
    table = _load_for_model(args.data, model.preprocessor)
    X, y = apply_preprocessor(model.preprocessor, table)
    if y is None:
        raise DataError("evaluation data must include the target column")
    proba, _ = fusion.predict_matrix(model, X)
    report = evaluate_scores(proba, y)
    print(format_reports([("test", report)]))
    if args.out:
        write_text_atomic(args.out, f"{CSV_HEADER}\n{metrics_csv_row('test', report)}\n")
    return 0


def cmd_importance(args) -> int:
    model = load_model(args.model)
    table = importance_mod.gain_importance(model.ensemble)
    if not args.raw:
        table = importance_mod.collapse_attention_block(table)
    text, csv_text = importance_mod.rank_report(table, args.top)
    print(text)
    if args.csv_out:
        write_text_atomic(args.csv_out, csv_text + "\n")
    return 0


def cmd_ablate(args) -> int:
    cfg = _merged_config(args)
    table = _resolve_table(args, cfg)
    result = run_ablation(
        table,
        attention_config=cfg.attention_config(),
        boost_config=cfg.boost_config(),
        split_fraction=cfg["split.fraction"],
        split_seed=cfg["split.seed"],
        drop=cfg.drop_columns(),
        manual_weights=cfg.manual_weights(),
        shallow_k=cfg["model.shallow_k"],
        augment_mode=cfg["model.augment_mode"],
    )
    write_text_atomic(args.out, result_to_csv(result))
    print(format_reports(result.rows))
    print(f"results written to {args.out}")
    return 0


def cmd_remove_features(args) -> int:
    cfg = _merged_config(args)
    table = _resolve_table(args, cfg)
    features = [f.strip() for f in args.features.split(",") if f.strip()]
    result = run_feature_removal(
        features,
        table,
        attention_config=cfg.attention_config(),
        boost_config=cfg.boost_config(),
        split_fraction=cfg["split.fraction"],
        split_seed=cfg["split.seed"],
        drop=cfg.drop_columns(),
        augment_mode=cfg["model.augment_mode"],
    )
    write_text_atomic(args.out, result_to_csv(result))
    print(format_reports(result.rows))
    print(f"results written to {args.out}")
    return 0


def cmd_synth(args) -> int:
    cfg = _merged_config(args)
    table = generate_synthetic(cfg.synthetic_spec())
    write_text_atomic(args.out, table_to_csv_text(table))
    print(f"{table.row_count} rows written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attnboost",
        description="Attention-augmented gradient boosting for tabular binary classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model, save it, and print metrics")
    _add_source_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", default="model.attnboost", help="model file path")
    p.add_argument("--metrics-out", help="write train/test metrics CSV here")
    p.add_argument("--test-out", help="write the held-out test rows as CSV here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="probability CSV path (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="metrics of a saved model on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="metrics CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="gain-based feature ranking of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--raw", action="store_true", help="keep attn_* columns unaggregated")
    p.add_argument("--csv-out", help="ranking CSV path")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("ablate", help="train and evaluate all seven variants")
    _add_source_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("remove-features", help="retrain with named features removed")
    _add_source_flags(p)
    _add_config_flags(p)
    p.add_argument("--features", default=",".join(REMOVAL_FEATURES))
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=cmd_remove_features)

    p = sub.add_parser("synth", help="generate a planted synthetic CSV")
    _add_config_flags(p)
    p.add_argument("--rows", dest="synth_rows", type=int, default=None)
    p.add_argument("--seed", dest="synth_seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def _check_thread_cap() -> None:
    value = os.environ.get("ATTNBOOST_THREADS")
    if value is None:
        return
    try:
        cap = int(value)
    except ValueError:
        raise ConfigError(f"ATTNBOOST_THREADS must be an integer, got {value!r}") from None
    if cap < 1:
        raise ConfigError("ATTNBOOST_THREADS must be >= 1")
    # execution is observably single-threaded, so any cap >= 1 is satisfied


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        _check_thread_cap()
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ModelFormatError, AttnBoostError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
