"""Manifest and feature-table I/O.

A manifest lists WAV files with their emotion label and an optional part
start time. Extracted features travel as a CSV (or JSON) table whose
header is fixed: part_id, label, then every feature name in order.
Readers are strict so a schema drift fails loudly instead of silently
shifting columns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES

EMOTION_LABELS = ("happy", "sad", "relaxing", "exciting", "epic", "thriller")

CSV_FLOAT_FORMAT = "%.9g"


class ManifestError(ValueError):
    """The manifest file is missing, malformed, or lists invalid rows."""


class SchemaError(ValueError):
    """A feature table does not match the expected schema."""


def ordered_labels(labels) -> list:
    """Unique labels, canonical emotion order first, extras sorted after."""
    present = set(str(lab) for lab in labels)
    ordered = [lab for lab in EMOTION_LABELS if lab in present]
    ordered += sorted(present - set(EMOTION_LABELS))
    return ordered


@dataclass(frozen=True)
class ManifestRow:
    path: Path
    label: str
    start: float = 0.0

    @property
    def part_id(self) -> str:
        return f"{self.path.stem}@{self.start:g}"


def read_manifest(path) -> list:
    """Parse a manifest CSV with header ``path,label`` or ``path,label,start``.

    Labels must come from the closed emotion set; start times must be
    non-negative numbers (blank means 0). Duplicate (path, start) pairs
    are rejected because they would collide on part_id.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not rows:
        raise ManifestError(f"{path}: empty manifest")
    header = [cell.strip() for cell in rows[0]]
    if header not in (["path", "label"], ["path", "label", "start"]):
        raise ManifestError(
            f"{path}: manifest header must be 'path,label' or 'path,label,start', "
            f"got {','.join(header)!r}"
        )
    out = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ManifestError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        wav = row[0].strip()
        label = row[1].strip()
        if not wav:
            raise ManifestError(f"{path}:{lineno}: empty path")
        if label not in EMOTION_LABELS:
            raise ManifestError(
                f"{path}:{lineno}: unknown label {label!r} "
                f"(expected one of {', '.join(EMOTION_LABELS)})"
            )
        start = 0.0
        if len(header) == 3 and row[2].strip():
            try:
                start = float(row[2])
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: bad start time {row[2]!r}") from exc
            if not np.isfinite(start) or start < 0:
                raise ManifestError(f"{path}:{lineno}: start time must be >= 0")
        key = (wav, start)
        if key in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate entry for {wav!r} at {start:g} s")
        seen.add(key)
        out.append(ManifestRow(Path(wav), label, start))
    if not out:
        raise ManifestError(f"{path}: manifest lists no files")
    return out


@dataclass(frozen=True)
class FeatureTable:
    """Feature rows with identities and labels; the unit all analysis runs on."""

    part_ids: tuple
    labels: tuple
    X: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64)
        n = len(self.part_ids)
        if len(self.labels) != n:
            raise ValueError("part_ids and labels differ in length")
        if X.shape != (n, len(self.feature_names)):
            raise ValueError(
                f"feature matrix shape {X.shape} does not match "
                f"{n} parts x {len(self.feature_names)} features"
            )
        if X.size and not np.all(np.isfinite(X)):
            raise ValueError("feature matrix contains non-finite values")
        if len(set(self.part_ids)) != n:
            dupes = sorted({p for p in self.part_ids if list(self.part_ids).count(p) > 1})
            raise ValueError(f"duplicate part_ids: {', '.join(dupes)}")
        X.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "part_ids", tuple(self.part_ids))
        object.__setattr__(self, "labels", tuple(str(lab) for lab in self.labels))

    def __len__(self) -> int:
        return len(self.part_ids)


def _expected_header(feature_names) -> list:
    return ["part_id", "label", *feature_names]


def write_feature_csv(table: FeatureTable, path) -> None:
    """Write the feature table; floats carry 9 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(table.feature_names))
        for part_id, label, row in zip(table.part_ids, table.labels, table.X):
            writer.writerow([part_id, label, *(CSV_FLOAT_FORMAT % v for v in row)])


def read_feature_csv(path, feature_names=FEATURE_NAMES, closed_labels: bool = True) -> FeatureTable:
    """Read a feature CSV, validating the exact expected header.

    ``closed_labels`` restricts labels to the emotion set; prediction
    inputs may disable that to carry placeholder labels.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read feature table {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: empty feature table")
    expected = _expected_header(feature_names)
    if rows[0] != expected:
        raise SchemaError(
            f"{path}: header mismatch; expected {len(expected)} columns starting "
            f"'part_id,label,...' with the canonical feature names, got "
            f"{len(rows[0])} columns"
        )
    part_ids, labels, data = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(expected):
            raise SchemaError(f"{path}:{lineno}: expected {len(expected)} cells, got {len(row)}")
        part_ids.append(row[0])
        label = row[1]
        if closed_labels and label not in EMOTION_LABELS:
            raise SchemaError(
                f"{path}:{lineno}: unknown label {label!r} "
                f"(expected one of {', '.join(EMOTION_LABELS)})"
            )
        labels.append(label)
        try:
            values = [float(cell) for cell in row[2:]]
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: non-numeric feature value") from exc
        if not all(np.isfinite(values)):
            raise SchemaError(f"{path}:{lineno}: non-finite feature value")
        data.append(values)
    if not data:
        raise SchemaError(f"{path}: feature table has no rows")
    try:
        return FeatureTable(tuple(part_ids), tuple(labels), np.asarray(data), tuple(feature_names))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def write_feature_json(table: FeatureTable, path) -> None:
    """JSON variant of the feature table, mirroring the CSV schema."""
    payload = {
        "feature_names": list(table.feature_names),
        "parts": [
            {"part_id": part_id, "label": label, "values": [float(v) for v in row]}
            for part_id, label, row in zip(table.part_ids, table.labels, table.X)
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def read_feature_json(path, feature_names=FEATURE_NAMES, closed_labels: bool = True) -> FeatureTable:
    path = Path(path)
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read feature table {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict) or list(payload.get("feature_names", [])) != list(feature_names):
        raise SchemaError(f"{path}: feature_names do not match the expected schema")
    part_ids, labels, data = [], [], []
    for i, entry in enumerate(payload.get("parts", [])):
        try:
            part_ids.append(str(entry["part_id"]))
            label = str(entry["label"])
            values = [float(v) for v in entry["values"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: malformed part entry {i} ({exc})") from exc
        if closed_labels and label not in EMOTION_LABELS:
            raise SchemaError(f"{path}: unknown label {label!r} in part entry {i}")
        labels.append(label)
        data.append(values)
    if not data:
        raise SchemaError(f"{path}: feature table has no rows")
    try:
        return FeatureTable(tuple(part_ids), tuple(labels), np.asarray(data), tuple(feature_names))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
