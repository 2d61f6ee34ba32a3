"""Label separability analysis.

Fisher's criterion scores how well one scalar feature splits two labels;
the pairwise matrix takes, for every label pair, the best score over all
features and remembers which feature group supplied it. The label summary
condenses each label's row to a mean and standard deviation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, _group_of


def fisher_separability(samples_a, samples_b, ddof: int = 0) -> float:
    """Fisher's criterion (mu_a - mu_b)^2 / (var_a + var_b) for two samples.

    Variances use ``ddof`` (0 = population). When both variances vanish
    the score is 0 for equal means and +inf otherwise; the infinity acts
    as a sentinel for a perfectly separating constant feature.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample list needs at least 2 values")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    gap = (a.mean() - b.mean()) ** 2
    spread = a.var(ddof=ddof) + b.var(ddof=ddof)
    if spread == 0.0:
        return 0.0 if gap == 0.0 else float("inf")
    return float(gap / spread)


@dataclass(frozen=True)
class SeparabilityMatrix:
    """Max Fisher score per label pair plus the group that attained it.

    ``values`` is symmetric with NaN on the diagonal; ``groups`` holds the
    winning feature group name per off-diagonal cell and "" on the
    diagonal.
    """

    labels: tuple
    values: np.ndarray
    groups: np.ndarray
    best_features: np.ndarray

    def pair(self, label_a: str, label_b: str) -> float:
        i = self.labels.index(label_a)
        j = self.labels.index(label_b)
        return float(self.values[i, j])


def pairwise_max_separability(
    X,
    labels,
    feature_names: tuple = FEATURE_NAMES,
    feature_groups: dict | None = None,
    label_order: tuple | None = None,
    ddof: int = 0,
) -> SeparabilityMatrix:
    """Best single-feature Fisher score for every pair of labels.

    Ties between features go to the earliest feature in column order, so
    the winning group is deterministic. Every label present must have at
    least 2 rows.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D feature matrix")
    if X.shape[1] != len(feature_names):
        raise ValueError(
            f"matrix has {X.shape[1]} columns but {len(feature_names)} feature names"
        )
    labels = np.asarray(labels, dtype=object)
    if labels.size != X.shape[0]:
        raise ValueError("labels and rows differ in length")
    if feature_groups is None:
        feature_groups = {name: _group_of(name) for name in feature_names}

    present = _ordered_unique(labels, label_order)
    if len(present) < 2:
        raise ValueError("need at least 2 labels")

    means = {}
    variances = {}
    for lab in present:
        rows = X[labels == lab]
        if rows.shape[0] < 2:
            raise ValueError(f"label {lab!r} has fewer than 2 samples")
        means[lab] = rows.mean(axis=0)
        variances[lab] = rows.var(axis=0, ddof=ddof)

    k = len(present)
    values = np.full((k, k), np.nan)
    groups = np.full((k, k), "", dtype=object)
    best_features = np.full((k, k), "", dtype=object)
    for i in range(k):
        for j in range(i + 1, k):
            gap = (means[present[i]] - means[present[j]]) ** 2
            spread = variances[present[i]] + variances[present[j]]
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = np.where(
                    spread > 0.0, gap / np.where(spread > 0.0, spread, 1.0),
                    np.where(gap > 0.0, np.inf, 0.0),
                )
            best = int(np.argmax(scores))
            name = feature_names[best]
            values[i, j] = values[j, i] = scores[best]
            groups[i, j] = groups[j, i] = feature_groups.get(name, "")
            best_features[i, j] = best_features[j, i] = name
    return SeparabilityMatrix(tuple(present), values, groups, best_features)


def _ordered_unique(labels: np.ndarray, label_order: tuple | None) -> list:
    present = set(labels.tolist())
    if label_order is None:
        from .dataset import EMOTION_LABELS

        label_order = EMOTION_LABELS
    ordered = [lab for lab in label_order if lab in present]
    ordered += sorted(present - set(label_order))
    return ordered


@dataclass(frozen=True)
class LabelSummary:
    """Per-label mean and standard deviation of its pairwise max scores."""

    labels: tuple
    averages: np.ndarray
    stds: np.ndarray
    ddof: int = 1


def label_summary(matrix: SeparabilityMatrix, ddof: int = 1) -> LabelSummary:
    """Summarise each label's off-diagonal row of the separability matrix.

    The default ``ddof=1`` reports the sample standard deviation over the
    label's pair scores; pass 0 for the population convention.
    """
    k = len(matrix.labels)
    averages = np.empty(k)
    stds = np.empty(k)
    for i in range(k):
        row = np.delete(matrix.values[i], i)
        averages[i] = row.mean()
        stds[i] = row.std(ddof=ddof)
    return LabelSummary(matrix.labels, averages, stds, ddof)


def _format_cell(value: float) -> str:
    # repr of a Python float is the shortest string that parses back
    # to the same double, so the CSVs round-trip exactly.
    return repr(float(value))


def write_matrix_csv(matrix: SeparabilityMatrix, path, kind: str = "values") -> None:
    """Write the score matrix (kind="values") or group matrix (kind="groups")."""
    source = matrix.values if kind == "values" else matrix.groups
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", *matrix.labels])
        for i, lab in enumerate(matrix.labels):
            row = [lab]
            for j in range(len(matrix.labels)):
                if i == j:
                    row.append("-")
                elif kind == "values":
                    row.append(_format_cell(source[i, j]))
                else:
                    row.append(source[i, j])
            writer.writerow(row)


def read_matrix_csv(path) -> tuple[tuple, np.ndarray]:
    """Parse a score matrix written by :func:`write_matrix_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["label"]:
        raise ValueError(f"{path}: not a separability matrix CSV")
    labels = tuple(rows[0][1:])
    k = len(labels)
    values = np.full((k, k), np.nan)
    for i, row in enumerate(rows[1:]):
        if row[0] != labels[i] or len(row) != k + 1:
            raise ValueError(f"{path}: malformed row {i + 1}")
        for j, cell in enumerate(row[1:]):
            if cell != "-":
                values[i, j] = float(cell)
    return labels, values


def write_summary_csv(summary: LabelSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "average", "std"])
        for lab, avg, std in zip(summary.labels, summary.averages, summary.stds):
            writer.writerow([lab, _format_cell(avg), _format_cell(std)])


def format_report(matrix: SeparabilityMatrix, summary: LabelSummary) -> str:
    """Human-readable text rendering of the matrix, groups, and summary."""
    cells = [str(g) for g in matrix.groups.ravel()]
    cells += [f"{v:.2f}" for v in matrix.values.ravel() if np.isfinite(v)]
    cells += [f"{v:.2f}" for v in (*summary.averages, *summary.stds)]
    cells += list(matrix.labels) + ["average"]
    width = max(len(c) for c in cells) + 2

    def fmt(cell: str) -> str:
        return cell.rjust(width)

    lines = ["Pairwise max separability (Fisher score)", ""]
    lines.append(fmt("") + "".join(fmt(lab) for lab in matrix.labels))
    for i, lab in enumerate(matrix.labels):
        cells = []
        for j in range(len(matrix.labels)):
            if i == j:
                cells.append(fmt("-"))
            else:
                cells.append(fmt(f"{matrix.values[i, j]:.2f}"))
        lines.append(fmt(lab) + "".join(cells))
    lines += ["", "Winning feature group per pair", ""]
    lines.append(fmt("") + "".join(fmt(lab) for lab in matrix.labels))
    for i, lab in enumerate(matrix.labels):
        cells = [
            fmt("-") if i == j else fmt(str(matrix.groups[i, j]))
            for j in range(len(matrix.labels))
        ]
        lines.append(fmt(lab) + "".join(cells))
    lines += ["", "Per-label summary", ""]
    lines.append(fmt("") + fmt("average") + fmt("std"))
    for lab, avg, std in zip(summary.labels, summary.averages, summary.stds):
        lines.append(fmt(lab) + fmt(f"{avg:.2f}") + fmt(f"{std:.2f}"))
    return "\n".join(lines) + "\n"


def write_reports(matrix: SeparabilityMatrix, summary: LabelSummary, out_dir) -> dict:
    """Write all analysis outputs into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "matrix": out / "separability_matrix.csv",
        "groups": out / "separability_groups.csv",
        "summary": out / "separability_summary.csv",
        "report": out / "separability_report.txt",
    }
    write_matrix_csv(matrix, paths["matrix"], kind="values")
    write_matrix_csv(matrix, paths["groups"], kind="groups")
    write_summary_csv(summary, paths["summary"])
    paths["report"].write_text(format_report(matrix, summary))
    return paths
