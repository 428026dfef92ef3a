"""Command-line pipeline: ingest -> label -> split/train -> evaluate -> report.

Exit codes: 0 success, 2 configuration/schema/credential problems, 3
transport exhaustion, 4 single-class training data. Outputs are written
atomically after a command has fully succeeded, so a nonzero exit leaves no
partial artifacts (beyond logs on stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, learners
from .dataset import (
    DEFAULT_HIT_THRESHOLD,
    class_distribution,
    label_hit,
    split,
    split_two_way,
    standardize_apply,
    standardize_fit,
)
from .errors import (
    ApiError,
    CredentialError,
    HitPredictError,
    SchemaError,
    SingleClassError,
    TransportError,
    ValidationError,
)
from .manifest import RunManifest
from .metrics import evaluate, report_to_dict, write_report_json, write_roc_csv
from .records_io import (
    LABELED_COLUMNS,
    feature_matrix,
    load_labeled,
    load_records,
    save_labeled,
    save_records,
)
from .spotify import FixtureTransport, ApiCredentials, PlaylistRef, SpotifyClient
from .synth import generate_labeled_records

CREDENTIAL_ENV_VARS = ("SPOTIFY_CLIENT_ID", "SPOTIFY_CLIENT_SECRET")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_SINGLE_CLASS = 4

# CLI flag dest -> config field, applied only when the user set the flag.
_HYPERPARAM_DESTS = (
    "learning_rate",
    "n_iters",
    "n_estimators",
    "max_depth",
    "min_samples_split",
    "max_features",
    "reg_lambda",
    "gamma",
    "min_child_weight",
    "hidden1",
    "hidden2",
    "batch_size",
    "epochs",
    "class_weight",
    "decision_threshold",
)


def _atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _load_any_records(path: str | Path):
    """Accept either a plain records file or a labeled one (labels ignored)."""
    suffix = Path(path).suffix.lower()
    if suffix not in (".csv", ".jsonl", ".ndjson"):
        raise SchemaError(f"unsupported file type {suffix!r}", path=str(path))
    if suffix == ".csv":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
        labeled = header == ",".join(LABELED_COLUMNS)
    else:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().strip()
        labeled = bool(first) and "\"hit\"" in first
    if labeled:
        records, _ = load_labeled(path)
        return records
    return load_records(path)


def _require_rows(records, path) -> None:
    if not records:
        raise ValidationError(f"input file has no data rows: {path}")


def _parse_years(raw: str | None) -> tuple[int | None, int | None] | None:
    if raw is None:
        return None
    if ".." not in raw:
        raise ValidationError(f"--years must look like '2010..', '..2020' or '2010..2020', got {raw!r}")
    lo_s, hi_s = raw.split("..", 1)
    try:
        lo = int(lo_s) if lo_s else None
        hi = int(hi_s) if hi_s else None
    except ValueError:
        raise ValidationError(f"--years bounds must be integers, got {raw!r}") from None
    return (lo, hi)


def _read_playlists_file(path: str | Path) -> list[PlaylistRef]:
    text = Path(path).read_text(encoding="utf-8")
    refs: list[PlaylistRef] = []
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            entries = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON playlist file: {exc.msg}", path=str(path)) from exc
        for entry in entries:
            refs.append(PlaylistRef(entry["playlist_id"], entry.get("description", "")))
        return refs
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        refs.append(PlaylistRef(parts[0], parts[1] if len(parts) > 1 else ""))
    return refs


# -- subcommand handlers -------------------------------------------------------


def cmd_ingest(args) -> int:
    playlists = _read_playlists_file(args.playlists)
    if not playlists:
        raise ValidationError(f"playlist file {args.playlists} lists no playlists")
    if args.offline_fixtures:
        client = SpotifyClient(transport=FixtureTransport.from_dir(args.offline_fixtures))
    else:
        client_id = os.environ.get(CREDENTIAL_ENV_VARS[0], "")
        client_secret = os.environ.get(CREDENTIAL_ENV_VARS[1], "")
        if not client_id or not client_secret:
            raise CredentialError(
                "missing credentials: set "
                f"{CREDENTIAL_ENV_VARS[0]} and {CREDENTIAL_ENV_VARS[1]}, "
                "or pass --offline-fixtures"
            )
        client = SpotifyClient(ApiCredentials(client_id, client_secret))
    records, summary = client.build_dataset(playlists, year_filter=_parse_years(args.years))
    save_records(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    print(
        "fetched={fetched} dropped={dropped} deduped={deduped} kept={kept}".format(
            fetched=summary.unique_ids,
            dropped=summary.dropped(),
            deduped=summary.duplicates_removed,
            kept=summary.kept,
        )
    )
    if args.summary_json:
        _atomic_write_text(args.summary_json, json.dumps(summary.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_label(args) -> int:
    records = _load_any_records(args.input)
    _require_rows(records, args.input)
    labels = np.array([label_hit(r.popularity, args.threshold) for r in records])
    save_labeled(records, labels, args.out)
    n0, n1 = class_distribution(labels)
    print(f"{n0} non hits, {n1} hits")
    return EXIT_OK


def _split_for(args_split: str, n_rows: int, seed: int, test_fraction: float, labels=None):
    if args_split == "nn-two-way":
        return split_two_way(n_rows, seed, test_fraction)
    return split(n_rows, seed, stratify_labels=labels)


def _collect_overrides(args) -> dict:
    overrides = {}
    for dest in _HYPERPARAM_DESTS:
        value = getattr(args, dest, None)
        if value is None:
            continue
        field = "hit_decision_threshold" if dest == "decision_threshold" else dest
        overrides[field] = value
    if getattr(args, "no_bootstrap", False):
        overrides["bootstrap"] = False
    if getattr(args, "no_feature_subsample", False):
        overrides["max_features"] = None
    return overrides


def cmd_train(args) -> int:
    records, labels = load_labeled(args.input)
    _require_rows(records, args.input)
    n0, n1 = class_distribution(labels)
    if n0 == 0 or n1 == 0:
        raise SingleClassError(f"training data has a single class ({n0} non hits, {n1} hits)")

    variant = learners.canonical_variant(args.model)
    config = learners.make_config(variant, _collect_overrides(args), seed=args.seed)
    parts = _split_for(
        args.split,
        len(records),
        args.seed,
        args.test_fraction,
        labels=labels if args.stratify else None,
    )
    X = feature_matrix(records)
    y = np.asarray(labels)
    train_rows = np.array(parts.train)

    standardization = None
    X_train = X[train_rows]
    if variant in ("lr", "mlp"):
        standardization = standardize_fit(X_train)
        X_train = standardize_apply(standardization, X_train)

    model = learners.train(variant, X_train, y[train_rows], config)

    sizes = {"train": len(parts.train), "validation": len(parts.validation), "test": len(parts.test)}
    training_meta = {
        "split": args.split,
        "seed": args.seed,
        "n_rows": len(records),
        "sizes": sizes,
        "test_fraction": args.test_fraction,
        "stratified": bool(args.stratify),
    }
    learners.save_model(model, args.out, standardization, training_meta)

    manifest = RunManifest(
        command="train",
        config={
            "model": variant,
            "seed": args.seed,
            "split": args.split,
            "test_fraction": args.test_fraction,
            "stratified": bool(args.stratify),
            "hyperparameters": learners.config_to_dict(config),
        },
        outputs=[str(args.out)],
        extra={"sizes": sizes},
    )
    manifest.add_input(args.input)
    manifest.write(str(args.out) + ".manifest.json")

    if args.export_indices:
        doc = {
            "seed": parts.seed,
            "train": list(parts.train),
            "validation": list(parts.validation),
            "test": list(parts.test),
        }
        _atomic_write_text(args.export_indices, json.dumps(doc) + "\n")

    print(
        f"trained {variant} on {sizes['train']} rows "
        f"(validation {sizes['validation']}, test {sizes['test']}) -> {args.out}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    saved = learners.load_model(args.model)
    records, labels = load_labeled(args.input)
    _require_rows(records, args.input)

    meta = saved.training_meta or {}
    split_mode = meta.get("split", "three-way")
    seed = int(meta.get("seed", 0))
    test_fraction = float(meta.get("test_fraction", 0.30))
    parts = _split_for(
        split_mode,
        len(records),
        seed,
        test_fraction,
        labels=np.asarray(labels) if meta.get("stratified") else None,
    )
    rows = {"train": parts.train, "validation": parts.validation, "test": parts.test}[args.partition]
    if not rows:
        raise ValidationError(
            f"partition {args.partition!r} is empty for split mode {split_mode!r}"
        )
    idx = np.array(rows)

    X = feature_matrix(records)
    if saved.standardization is not None:
        X = standardize_apply(saved.standardization, X)
    report = evaluate(saved.model, X[idx], np.asarray(labels)[idx], args.threshold)

    doc = report_to_dict(report)
    doc["model_variant"] = saved.model.variant
    doc["model_path"] = str(args.model)
    doc["data_path"] = str(args.input)
    doc["partition"] = args.partition
    if saved.model.variant in ("rf", "gbt"):
        doc["feature_importance"] = [
            [name, round(share, 6)] for name, share in learners.ranked_importance(saved.model)
        ]
    write_report_json(doc, args.out)
    if args.roc_csv:
        write_roc_csv(report.roc, args.roc_csv)

    weighted = report.metrics["weighted"]
    print(
        f"{saved.model.variant} on {args.partition} ({report.n_rows} rows): "
        f"accuracy {weighted.accuracy:.4f}, precision {weighted.precision:.4f}, "
        f"recall {weighted.recall:.4f}, F1 {weighted.f1:.4f}, AUC {report.roc.auc:.4f}"
    )
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    try:
        grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid grid JSON: {exc.msg}", path=str(args.grid)) from exc
    if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
        raise SchemaError("grid file must map parameter names to value lists", path=str(args.grid))

    records, labels = load_labeled(args.input)
    _require_rows(records, args.input)
    result = learners.grid_search(args.model, grid, feature_matrix(records), np.asarray(labels), args.seed)

    doc = {
        "variant": learners.canonical_variant(args.model),
        "seed": args.seed,
        "best_score": round(result.best_score, 6),
        "best_config": learners.config_to_dict(result.best_config),
        "cells": [
            {"config": learners.config_to_dict(config), "score": round(score, 6)}
            for config, score in result.cells
        ],
    }
    _atomic_write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    best = result.best_config
    print(f"best weighted F1 {result.best_score:.4f} with {learners.config_to_dict(best)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    records, labels = generate_labeled_records(args.n, args.hits, args.seed)
    save_labeled(records, labels, args.out)
    n0, n1 = class_distribution(labels)
    print(f"wrote {len(records)} rows to {args.out} ({n0} non hits, {n1} hits)")
    return EXIT_OK


def _require_field(doc: dict, path: str, *keys: str):
    node = doc
    for key in keys:
        if not isinstance(node, dict) or key not in node:
            raise ValidationError(f"report {path} is missing field {'.'.join(keys)!r}")
        node = node[key]
    return node


def cmd_report(args) -> int:
    rows = []
    importances = []
    for path in args.reports:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid report JSON: {exc.msg}", path=str(path)) from exc
        name = _require_field(doc, path, "model_variant")
        weighted = {
            metric: _require_field(doc, path, "metrics", "weighted", metric)
            for metric in ("accuracy", "precision", "recall", "f1")
        }
        rows.append((name, weighted))
        if "feature_importance" in doc:
            importances.append((name, doc["feature_importance"]))

    if args.out.endswith(".csv"):
        lines = ["model,accuracy,precision,recall,f1"]
        for name, w in rows:
            lines.append(
                f"{name},{w['accuracy']:.4f},{w['precision']:.4f},{w['recall']:.4f},{w['f1']:.4f}"
            )
        _atomic_write_text(args.out, "\n".join(lines) + "\n")
    else:
        lines = [
            "| model | accuracy | precision | recall | F1 |",
            "| --- | --- | --- | --- | --- |",
        ]
        for name, w in rows:
            lines.append(
                f"| {name} | {w['accuracy']:.4f} | {w['precision']:.4f} "
                f"| {w['recall']:.4f} | {w['f1']:.4f} |"
            )
        for name, ranking in importances:
            lines.append("")
            lines.append(f"Feature importance ({name}):")
            lines.append("")
            lines.append("| feature | share |")
            lines.append("| --- | --- |")
            for feature, share in ranking:
                lines.append(f"| {feature} | {share:.4f} |")
        _atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote comparison of {len(rows)} report(s) to {args.out}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hitpredict",
        description="Hit-song prediction pipeline: ingest, label, train, evaluate, report.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}
    parser.subparser_registry = registry  # used to push --config defaults

    original_add_parser = sub.add_parser

    def add_parser(name, **kwargs):
        p = original_add_parser(name, **kwargs)
        registry[name] = p
        return p

    sub.add_parser = add_parser

    def common(p):
        p.add_argument("--config", dest="config_path", help="JSON file of default flag values")

    p = sub.add_parser("ingest", help="crawl playlists into a records file")
    common(p)
    p.add_argument("--playlists", required=True, help="playlist list (JSON or one id per line)")
    p.add_argument("--out", required=True)
    p.add_argument("--offline-fixtures", help="replay a recorded fixtures directory (no network)")
    p.add_argument("--years", help="release-year filter, e.g. 2010.. or 2010..2020")
    p.add_argument("--summary-json", help="also write the ingest summary as JSON")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("label", help="append the hit column by popularity threshold")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=int, default=DEFAULT_HIT_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_label)

    p = sub.add_parser("train", help="split, standardize and train one model")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True, choices=["lr", "dt", "rf", "xgb", "nn"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["three-way", "nn-two-way"], default="three-way")
    p.add_argument("--test-fraction", type=float, default=0.30, help="two-way test share")
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--export-indices", help="write the split's index lists as JSON")
    hp = p.add_argument_group("hyperparameters (unset flags keep variant defaults)")
    hp.add_argument("--learning-rate", type=float, dest="learning_rate")
    hp.add_argument("--iters", type=int, dest="n_iters")
    hp.add_argument("--n-estimators", type=int, dest="n_estimators")
    hp.add_argument("--max-depth", type=int, dest="max_depth")
    hp.add_argument("--min-samples-split", type=int, dest="min_samples_split")
    hp.add_argument("--max-features", type=int, dest="max_features")
    hp.add_argument("--no-bootstrap", action="store_true")
    hp.add_argument("--no-feature-subsample", action="store_true")
    hp.add_argument("--reg-lambda", type=float, dest="reg_lambda")
    hp.add_argument("--gamma", type=float, dest="gamma")
    hp.add_argument("--min-child-weight", type=float, dest="min_child_weight")
    hp.add_argument("--hidden1", type=int)
    hp.add_argument("--hidden2", type=int)
    hp.add_argument("--batch-size", type=int, dest="batch_size")
    hp.add_argument("--epochs", type=int)
    hp.add_argument("--class-weight", choices=["balanced"], dest="class_weight")
    hp.add_argument("--decision-threshold", type=float, dest="decision_threshold")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on a split partition")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--partition", choices=["train", "validation", "test"], default="validation")
    p.add_argument("--threshold", type=float, help="decision threshold (default: model config)")
    p.add_argument("--out", required=True)
    p.add_argument("--roc-csv", dest="roc_csv", help="write ROC points as 2-column CSV")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("gridsearch", help="exhaustive hyperparameter sweep")
    common(p)
    p.add_argument("--model", required=True, choices=["lr", "dt", "rf", "xgb", "nn"])
    p.add_argument("--grid", required=True, help="JSON file: parameter -> value list")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gridsearch)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    common(p)
    p.add_argument("--n", type=int, default=2063)
    p.add_argument("--hits", type=int, default=237)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("report", help="combine evaluation reports into one table")
    common(p)
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_report)

    return parser


def _peek_config_path(argv: list[str]) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    config_path = _peek_config_path(argv)
    if config_path is not None:
        try:
            defaults = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            print(f"error: config file not found: {config_path}", file=sys.stderr)
            return EXIT_CONFIG
        except json.JSONDecodeError as exc:
            print(f"error: invalid config JSON: {exc.msg}", file=sys.stderr)
            return EXIT_CONFIG
        if not isinstance(defaults, dict):
            print("error: config file must contain a JSON object", file=sys.stderr)
            return EXIT_CONFIG
        parser.set_defaults(**defaults)

    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except SingleClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGLE_CLASS
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ValidationError, SchemaError, CredentialError, ApiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HitPredictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
