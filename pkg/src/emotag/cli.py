"""Command-line interface.

Subcommands cover the full pipeline: ``extract`` turns a manifest of WAV
files into a feature table, ``separability`` scores how well the labels
separate, ``train`` fits the one-vs-one SVM, ``evaluate`` runs
leave-one-out cross-validation, and ``predict`` labels new audio.

Exit codes: 0 success, 1 data error (unreadable audio, degenerate
dataset), 2 usage or schema error (bad flags, malformed manifest or
tables, missing model).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import format_report, label_summary, pairwise_max_separability, write_reports
from .audio import prepare_part
from .classifier import (
    EmotionClassifier,
    ModelFormatError,
    format_eval_report,
    load_model,
    loocv,
    save_model,
    write_eval_csv,
)
from .config import ConfigError, PipelineConfig, resolve_config
from .dataset import (
    FeatureTable,
    ManifestError,
    SchemaError,
    read_feature_csv,
    read_feature_json,
    read_manifest,
    write_feature_csv,
    write_feature_json,
)
from .features import extract_features, feature_names
from .spectral import compute_spectrogram, dump_spectrogram_csv

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Wrong invocation or schema; maps to exit code 2."""


class DataError(Exception):
    """Bad input data; maps to exit code 1."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emotag",
        description="Extract acoustic features from music parts, analyse label "
        "separability, and train/apply an SVM emotion tagger.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized extras")

    def add_train_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--kernel", choices=("linear", "rbf"), default=None)
        p.add_argument("--c", type=float, default=None, help="SVM box constraint")
        p.add_argument(
            "--gamma", type=float, default=None,
            help="rbf width; defaults to 1/(n_features * mean feature variance)",
        )

    p = sub.add_parser("extract", help="compute feature vectors for a manifest of WAVs")
    p.add_argument("--manifest", type=Path, required=True, help="CSV of path,label[,start]")
    p.add_argument("--out", type=Path, required=True, help="output feature table")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--jobs", type=int, default=None, help="parallel decode workers")
    p.add_argument(
        "--dump-spectrograms", type=Path, default=None, metavar="DIR",
        help="also write each part's magnitude spectrogram as CSV into DIR",
    )
    add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("separability", help="pairwise Fisher separability of the labels")
    p.add_argument("--features", type=Path, required=True, help="feature table from extract")
    p.add_argument("--out", type=Path, required=True, help="directory for the reports")
    add_common(p)
    p.set_defaults(func=cmd_separability)

    p = sub.add_parser("train", help="fit the one-vs-one SVM on a feature table")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="model file to write")
    add_train_flags(p)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="leave-one-out cross-validation on a feature table")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="directory for accuracy/confusion files")
    add_train_flags(p)
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="label WAV files or feature rows with a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("inputs", nargs="*", type=Path, help="WAV files to label")
    p.add_argument("--features", type=Path, default=None, help="feature table to label instead")
    p.add_argument("--start", type=float, default=0.0, help="part start time for WAV inputs")
    p.add_argument("--out", type=Path, default=None, help="optional CSV of predictions")
    add_common(p)
    p.set_defaults(func=cmd_predict)

    return parser


def _resolve(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    for key in ("kernel", "c", "gamma", "seed", "jobs"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    return resolve_config(getattr(args, "config", None), overrides)


def _extract_one(path: Path, start: float, part_id: str, cfg: PipelineConfig):
    part = prepare_part(
        path.read_bytes(),
        start,
        sample_rate=cfg.sample_rate,
        peak_target=cfg.peak_target,
        source_id=part_id,
    )
    vector = extract_features(
        part,
        n_frames=cfg.n_frames,
        n_subbands=cfg.n_subbands,
        n_mfcc=cfg.n_mfcc,
        mfcc_first=cfg.mfcc_first,
        mode_convention=cfg.mode_convention,
    )
    return part, vector


def cmd_extract(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    rows = read_manifest(args.manifest)

    def job(row):
        try:
            return _extract_one(row.path, row.start, row.part_id, cfg), None
        except Exception as exc:
            return None, f"{row.path}: {exc}"

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(job, rows))
    else:
        outcomes = [job(row) for row in rows]

    failures = [err for _, err in outcomes if err is not None]
    successes = []
    for row, (ok, _) in zip(rows, outcomes):
        if ok is not None:
            part, vector = ok
            successes.append((row, part, vector))
    for err in failures:
        print(f"error: {err}", file=sys.stderr)

    if successes:
        names = feature_names(cfg.n_subbands, cfg.n_mfcc)
        table = FeatureTable(
            tuple(row.part_id for row, _, _ in successes),
            tuple(row.label for row, _, _ in successes),
            np.vstack([vec.values for _, _, vec in successes]),
            names,
        )
        if args.format == "json":
            write_feature_json(table, args.out)
        else:
            write_feature_csv(table, args.out)
        if args.dump_spectrograms is not None:
            args.dump_spectrograms.mkdir(parents=True, exist_ok=True)
            for row, part, _ in successes:
                spec = compute_spectrogram(part, n_frames=cfg.n_frames)
                safe = row.part_id.replace("/", "_")
                dump_spectrogram_csv(spec, args.dump_spectrograms / f"{safe}.csv")
        print(f"extracted {len(successes)} of {len(rows)} parts -> {args.out}")
    if failures:
        print(f"{len(failures)} of {len(rows)} parts failed", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _read_table(path: Path, closed_labels: bool = True) -> FeatureTable:
    if path.suffix.lower() == ".json":
        return read_feature_json(path, closed_labels=closed_labels)
    return read_feature_csv(path, closed_labels=closed_labels)


def cmd_separability(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    table = _read_table(args.features)
    if len(set(table.labels)) < 2:
        raise DataError("need at least 2 labels to compare")
    try:
        matrix = pairwise_max_separability(table.X, table.labels, table.feature_names)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    summary = label_summary(matrix)
    paths = write_reports(matrix, summary, args.out)
    print(format_report(matrix, summary), end="")
    print(f"reports written to {paths['report'].parent}")
    return EXIT_OK


def _classifier_from(cfg: PipelineConfig) -> EmotionClassifier:
    return EmotionClassifier(
        kernel=cfg.kernel,
        C=cfg.c,
        gamma=cfg.gamma,
        tol=cfg.tolerance,
        max_passes=cfg.max_passes,
    )


def cmd_train(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    table = _read_table(args.features)
    clf = _classifier_from(cfg)
    try:
        clf.fit(table.X, table.labels)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    save_model(clf, args.out)
    sv_total = sum(m.support_vectors.shape[0] for _, _, m in clf.pair_models_)
    status = "converged" if clf.converged_ else "hit the iteration bound"
    print(
        f"trained {clf.kernel} model on {len(table)} rows, "
        f"{len(clf.classes_)} classes, {sv_total} support vectors ({status}) "
        f"-> {args.out}"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    table = _read_table(args.features)
    try:
        report = loocv(table.X, table.labels, template=_classifier_from(cfg))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(format_eval_report(report), end="")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_eval_csv(report, args.out / "accuracy.csv")
        (args.out / "confusion.txt").write_text(format_eval_report(report))
        print(f"reports written to {args.out}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    if not args.model.exists():
        raise UsageError(f"model file {args.model} does not exist")
    clf = load_model(args.model)
    if (args.features is None) == (not args.inputs):
        raise UsageError("pass either WAV inputs or --features, not both or neither")

    if args.features is not None:
        table = _read_table(args.features, closed_labels=False)
        part_ids = list(table.part_ids)
        X = table.X
    else:
        part_ids, rows, errors = [], [], []
        for wav in args.inputs:
            part_id = f"{wav.stem}@{args.start:g}"
            try:
                _, vector = _extract_one(wav, args.start, part_id, cfg)
            except Exception as exc:
                errors.append(f"{wav}: {exc}")
                continue
            part_ids.append(part_id)
            rows.append(vector.values)
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        if errors:
            return EXIT_DATA
        X = np.vstack(rows)

    try:
        predictions = clf.predict(X)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for part_id, label in zip(part_ids, predictions):
        print(f"{part_id}\t{label}")
    if args.out is not None:
        import csv as _csv

        with open(args.out, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["part_id", "label"])
            writer.writerows(zip(part_ids, predictions))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        if cfg.seed:
            np.random.seed(cfg.seed % (2**32))
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ManifestError, SchemaError, ModelFormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
