"""Multiclass emotion classifier and its evaluation utilities.

One binary SVM is trained per label pair (one-vs-one); prediction lets
every pair vote and the label with the most votes wins. Leave-one-out
cross-validation refits the standardizer and every boundary inside each
fold so no information leaks from the held-out row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone

from .svm import (
    DEFAULT_C,
    DEFAULT_MAX_PASSES,
    DEFAULT_TOL,
    KERNELS,
    BinarySvmModel,
    Standardizer,
    default_gamma,
    kernel_matrix,
    smo_solve,
)

MODEL_FORMAT = "emotag-svm-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """A model file is missing, corrupt, or has an incompatible version."""


class EmotionClassifier(BaseEstimator, ClassifierMixin):
    """One-vs-one SVM over emotion labels.

    Parameters
    ----------
    kernel : "linear" or "rbf".
    C : box constraint of every binary problem.
    gamma : rbf width; None picks 1 / (n_features * mean feature
        variance) from the training matrix after standardization.
    tol : KKT violation level at which optimization stops.
    max_passes : bound on optimization steps per binary problem.
    standardize : z-score features with statistics of the training rows.
        Kept as a switch so the effect of per-fold scaling is testable.

    Attributes
    ----------
    classes_ : sorted unique training labels.
    gamma_ : the gamma value actually used.
    pair_models_ : list of (class_a, class_b, BinarySvmModel); the
        decision value is positive for class_a.
    converged_ : False when any binary problem hit max_passes.
    """

    def __init__(
        self,
        kernel: str = "rbf",
        C: float = DEFAULT_C,
        gamma: float | None = None,
        tol: float = DEFAULT_TOL,
        max_passes: int = DEFAULT_MAX_PASSES,
        standardize: bool = True,
    ):
        self.kernel = kernel
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes
        self.standardize = standardize

    def fit(self, X, y) -> "EmotionClassifier":
        X = _check_matrix(X)
        y = np.asarray([str(lab) for lab in y], dtype=object)
        if y.size != X.shape[0]:
            raise ValueError("X and y differ in length")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r} (expected one of {KERNELS})")
        if self.C <= 0:
            raise ValueError("C must be positive")
        classes = np.unique(y)
        if classes.size < 2:
            raise ValueError("training data must contain at least 2 classes")

        if self.standardize:
            self.standardizer_ = Standardizer().fit(X)
            Xs = self.standardizer_.transform(X)
        else:
            self.standardizer_ = None
            Xs = X

        if self.gamma is not None:
            if self.gamma <= 0:
                raise ValueError("gamma must be positive")
            self.gamma_ = float(self.gamma)
        else:
            self.gamma_ = default_gamma(Xs)

        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        self.pair_models_ = []
        for a, b in combinations(classes, 2):
            rows_a = Xs[y == a]
            rows_b = Xs[y == b]
            Xp = np.vstack([rows_a, rows_b])
            yp = np.concatenate([np.ones(rows_a.shape[0]), -np.ones(rows_b.shape[0])])
            K = kernel_matrix(Xp, Xp, self.kernel, self.gamma_)
            alpha, bias, converged = smo_solve(
                K, yp, C=self.C, tol=self.tol, max_passes=self.max_passes
            )
            keep = alpha > 1e-12
            model = BinarySvmModel(
                support_vectors=Xp[keep].copy(),
                coef=(alpha * yp)[keep],
                bias=bias,
                converged=converged,
            )
            self.pair_models_.append((str(a), str(b), model))
        self.converged_ = all(m.converged for _, _, m in self.pair_models_)
        return self

    def _transformed(self, X) -> np.ndarray:
        X = _check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"input has {X.shape[1]} features, the model was trained on "
                f"{self.n_features_in_}"
            )
        return self.standardizer_.transform(X) if self.standardizer_ else X

    def pair_decisions(self, X) -> np.ndarray:
        """Decision value of every pair boundary, shape (n_pairs, n_rows)."""
        Xs = self._transformed(X)
        return np.vstack(
            [m.decision(Xs, self.kernel, self.gamma_) for _, _, m in self.pair_models_]
        )

    def predict(self, X) -> np.ndarray:
        """Majority vote over the pair boundaries.

        A positive decision votes for the pair's first class. Vote ties
        break by the larger sum of |decision| over the pairs each tied
        class won, then by class order.
        """
        decisions = self.pair_decisions(X)
        n = decisions.shape[1]
        index = {lab: k for k, lab in enumerate(self.classes_)}
        votes = np.zeros((n, self.classes_.size), dtype=np.int64)
        margins = np.zeros((n, self.classes_.size))
        for row, (a, b, _) in enumerate(self.pair_models_):
            d = decisions[row]
            pos = d > 0
            neg = d < 0
            votes[pos, index[a]] += 1
            votes[neg, index[b]] += 1
            margins[pos, index[a]] += d[pos]
            margins[neg, index[b]] += -d[neg]
        winners = []
        for r in range(n):
            top = votes[r].max()
            tied = np.flatnonzero(votes[r] == top)
            if tied.size > 1:
                best_margin = margins[r, tied].max()
                tied = tied[margins[r, tied] == best_margin]
            winners.append(self.classes_[tied[0]])
        return np.asarray(winners, dtype=object)


def _check_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D feature matrix")
    if X.size and not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


@dataclass(frozen=True)
class EvalReport:
    """Confusion matrix plus derived accuracies from one evaluation run.

    Rows of ``confusion`` are true labels, columns predicted labels, in
    ``labels`` order.
    """

    labels: tuple
    confusion: np.ndarray

    def __post_init__(self) -> None:
        confusion = np.array(self.confusion, dtype=np.int64)
        k = len(self.labels)
        if confusion.shape != (k, k):
            raise ValueError("confusion matrix shape does not match the label count")
        if np.any(confusion < 0) or not np.all(confusion.sum(axis=1) > 0):
            raise ValueError("every true label needs a positive row count")
        confusion.flags.writeable = False
        object.__setattr__(self, "confusion", confusion)

    @property
    def counts(self) -> dict:
        return {lab: int(n) for lab, n in zip(self.labels, self.confusion.sum(axis=1))}

    @property
    def per_label_accuracy(self) -> dict:
        sums = self.confusion.sum(axis=1)
        return {
            lab: float(self.confusion[i, i] / sums[i])
            for i, lab in enumerate(self.labels)
        }

    @property
    def overall_accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())


def loocv(X, y, template: EmotionClassifier | None = None, **params) -> EvalReport:
    """Leave-one-out cross-validation with per-fold refitting.

    Every fold clones the template classifier, fits it on all rows but
    one (standardizer included, so the held-out row never influences the
    scaling), and predicts the held-out row. Labels with a single row are
    rejected because their fold would have no training example of that
    label.
    """
    X = _check_matrix(X)
    y = np.asarray([str(lab) for lab in y], dtype=object)
    if y.size != X.shape[0]:
        raise ValueError("X and y differ in length")
    if template is None:
        template = EmotionClassifier(**params)
    elif params:
        raise ValueError("pass either a template classifier or keyword params, not both")

    from .dataset import ordered_labels

    labels = ordered_labels(y)
    for lab in labels:
        if int(np.sum(y == lab)) < 2:
            raise ValueError(
                f"label {lab!r} has only 1 row; leave-one-out needs at least 2"
            )

    index = {lab: k for k, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    mask = np.ones(X.shape[0], dtype=bool)
    for held in range(X.shape[0]):
        mask[held] = False
        clf = clone(template).fit(X[mask], y[mask])
        pred = clf.predict(X[held : held + 1])[0]
        mask[held] = True
        confusion[index[y[held]], index[pred]] += 1
    return EvalReport(tuple(labels), confusion)


def write_eval_csv(report: EvalReport, path) -> None:
    """Per-label counts and accuracies plus the overall line."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "count", "accuracy"])
        for lab in report.labels:
            writer.writerow(
                [lab, report.counts[lab], repr(report.per_label_accuracy[lab])]
            )
        writer.writerow(["overall", int(report.confusion.sum()), repr(report.overall_accuracy)])


def format_eval_report(report: EvalReport) -> str:
    width = max(10, max(len(lab) for lab in report.labels) + 1)

    def fmt(cell) -> str:
        return str(cell).rjust(width)

    lines = ["Confusion matrix (rows = true, columns = predicted)", ""]
    lines.append(fmt("") + "".join(fmt(lab) for lab in report.labels))
    for i, lab in enumerate(report.labels):
        lines.append(fmt(lab) + "".join(fmt(int(v)) for v in report.confusion[i]))
    lines += ["", "Per-label accuracy", ""]
    for lab in report.labels:
        lines.append(
            fmt(lab)
            + fmt(f"{report.per_label_accuracy[lab]:.1%}")
            + fmt(f"({report.counts[lab]} rows)")
        )
    lines.append("")
    lines.append(f"Overall accuracy: {report.overall_accuracy:.1%}")
    return "\n".join(lines) + "\n"


def save_model(clf: EmotionClassifier, path) -> None:
    """Serialize a fitted classifier to a versioned JSON file."""
    if not hasattr(clf, "pair_models_"):
        raise ValueError("cannot save an unfitted classifier")
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": clf.kernel,
        "C": clf.C,
        "gamma": clf.gamma_,
        "tol": clf.tol,
        "max_passes": clf.max_passes,
        "standardize": bool(clf.standardize),
        "n_features": clf.n_features_in_,
        "classes": [str(c) for c in clf.classes_],
        "standardizer": (
            {
                "mean": clf.standardizer_.means_.tolist(),
                "scale": clf.standardizer_.scales_.tolist(),
            }
            if clf.standardizer_
            else None
        ),
        "pairs": [
            {
                "positive": a,
                "negative": b,
                "support_vectors": m.support_vectors.tolist(),
                "coef": m.coef.tolist(),
                "bias": m.bias,
                "converged": bool(m.converged),
            }
            for a, b, m in clf.pair_models_
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> EmotionClassifier:
    """Load a classifier saved by :func:`save_model`.

    Raises ModelFormatError for unreadable JSON, a different format tag,
    or an unsupported version.
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model file ({exc})") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model version {payload.get('version')!r} "
            f"(this build reads version {MODEL_VERSION})"
        )
    try:
        clf = EmotionClassifier(
            kernel=payload["kernel"],
            C=payload["C"],
            gamma=payload["gamma"],
            tol=payload["tol"],
            max_passes=payload["max_passes"],
            standardize=payload["standardize"],
        )
        clf.gamma_ = float(payload["gamma"])
        clf.n_features_in_ = int(payload["n_features"])
        clf.classes_ = np.asarray(payload["classes"], dtype=object)
        std = payload["standardizer"]
        if std is None:
            clf.standardizer_ = None
        else:
            standardizer = Standardizer()
            standardizer.means_ = np.asarray(std["mean"], dtype=np.float64)
            standardizer.scales_ = np.asarray(std["scale"], dtype=np.float64)
            clf.standardizer_ = standardizer
        clf.pair_models_ = [
            (
                str(pair["positive"]),
                str(pair["negative"]),
                BinarySvmModel(
                    support_vectors=np.asarray(pair["support_vectors"], dtype=np.float64).reshape(
                        len(pair["coef"]), clf.n_features_in_
                    ),
                    coef=np.asarray(pair["coef"], dtype=np.float64),
                    bias=float(pair["bias"]),
                    converged=bool(pair["converged"]),
                ),
            )
            for pair in payload["pairs"]
        ]
        clf.converged_ = all(m.converged for _, _, m in clf.pair_models_)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model payload ({exc})") from exc
    return clf
