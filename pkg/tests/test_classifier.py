"""One-vs-one classifier, leave-one-out evaluation, and model files."""

import json

import numpy as np
import pytest

from emotag.classifier import (
    EmotionClassifier,
    EvalReport,
    ModelFormatError,
    format_eval_report,
    load_model,
    loocv,
    save_model,
    write_eval_csv,
)
from emotag.svm import BinarySvmModel, Standardizer


def cluster_data(n_classes=4, per_class=8, d=6, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-4.0, 4.0, (n_classes, d))
    labels = ["happy", "sad", "relaxing", "exciting", "epic", "thriller"][:n_classes]
    X, y = [], []
    for c, lab in enumerate(labels):
        X.append(centers[c] + spread * rng.standard_normal((per_class, d)))
        y += [lab] * per_class
    return np.vstack(X), np.asarray(y, dtype=object)


class TestFit:
    def test_pair_model_count(self):
        X, y = cluster_data(4)
        clf = EmotionClassifier().fit(X, y)
        assert len(clf.pair_models_) == 6  # 4 choose 2
        assert clf.converged_
        pairs = [(a, b) for a, b, _ in clf.pair_models_]
        assert len(set(pairs)) == 6
        for a, b in pairs:
            assert a < b  # class order is sorted, first class is positive

    def test_classes_sorted(self):
        X, y = cluster_data(3)
        clf = EmotionClassifier().fit(X, y)
        assert list(clf.classes_) == sorted(set(y))

    def test_training_accuracy_on_clusters(self):
        X, y = cluster_data(5, seed=1)
        clf = EmotionClassifier().fit(X, y)
        assert np.mean(clf.predict(X) == y) == 1.0

    def test_row_permutation_leaves_predictions_unchanged(self):
        X, y = cluster_data(4, seed=2)
        rng = np.random.default_rng(3)
        perm = rng.permutation(X.shape[0])
        q = rng.standard_normal((20, X.shape[1]))
        p1 = EmotionClassifier().fit(X, y).predict(q)
        p2 = EmotionClassifier().fit(X[perm], y[perm]).predict(q)
        np.testing.assert_array_equal(p1, p2)

    def test_gamma_resolution(self):
        X, y = cluster_data(3, seed=4)
        auto = EmotionClassifier().fit(X, y)
        assert auto.gamma_ > 0
        fixed = EmotionClassifier(gamma=0.5).fit(X, y)
        assert fixed.gamma_ == 0.5

    def test_standardize_off_keeps_raw_scale(self):
        X, y = cluster_data(3, seed=5)
        clf = EmotionClassifier(standardize=False).fit(X, y)
        assert clf.standardizer_ is None
        assert np.mean(clf.predict(X) == y) == 1.0

    def test_validation_errors(self):
        X, y = cluster_data(3)
        with pytest.raises(ValueError, match="differ in length"):
            EmotionClassifier().fit(X, y[:-1])
        with pytest.raises(ValueError, match="at least 2 classes"):
            EmotionClassifier().fit(X[:8], ["happy"] * 8)
        with pytest.raises(ValueError, match="unknown kernel"):
            EmotionClassifier(kernel="poly").fit(X, y)
        with pytest.raises(ValueError, match="C must be positive"):
            EmotionClassifier(C=-1.0).fit(X, y)
        with pytest.raises(ValueError, match="gamma must be positive"):
            EmotionClassifier(gamma=0.0).fit(X, y)
        with pytest.raises(ValueError, match="non-finite"):
            bad = X.copy()
            bad[0, 0] = np.nan
            EmotionClassifier().fit(bad, y)

    def test_predict_feature_count_mismatch(self):
        X, y = cluster_data(3, seed=6)
        clf = EmotionClassifier().fit(X, y)
        with pytest.raises(ValueError, match="features"):
            clf.predict(X[:, :4])

    def test_get_params_clone_round_trip(self):
        from sklearn.base import clone

        clf = EmotionClassifier(kernel="linear", C=2.0, standardize=False)
        dup = clone(clf)
        assert dup.get_params() == clf.get_params()
        assert not hasattr(dup, "pair_models_")


def bias_only_classifier(pair_biases):
    """Fitted-by-hand classifier whose pair decisions are fixed constants."""
    clf = EmotionClassifier(standardize=False)
    classes = sorted({c for a_b in pair_biases for c in a_b})
    clf.classes_ = np.asarray(classes, dtype=object)
    clf.n_features_in_ = 2
    clf.gamma_ = 1.0
    clf.standardizer_ = None
    clf.pair_models_ = [
        (a, b, BinarySvmModel(np.empty((0, 2)), np.empty(0), bias=bias))
        for (a, b), bias in pair_biases.items()
    ]
    clf.converged_ = True
    return clf


class TestVoting:
    def test_clear_majority(self):
        clf = bias_only_classifier(
            {("a", "b"): 1.0, ("a", "c"): 1.0, ("b", "c"): 0.2}
        )
        assert clf.predict(np.zeros((1, 2)))[0] == "a"

    def test_three_way_tie_breaks_on_margin(self):
        # every class wins exactly one pair; b's win is the largest
        clf = bias_only_classifier(
            {("a", "b"): 0.3, ("b", "c"): 0.4, ("a", "c"): -0.2}
        )
        assert clf.predict(np.zeros((1, 2)))[0] == "b"

    def test_exact_margin_tie_breaks_on_class_order(self):
        clf = bias_only_classifier(
            {("a", "b"): 0.3, ("b", "c"): 0.3, ("a", "c"): -0.3}
        )
        assert clf.predict(np.zeros((1, 2)))[0] == "a"

    def test_pair_decisions_shape(self):
        clf = bias_only_classifier(
            {("a", "b"): 0.3, ("b", "c"): 0.4, ("a", "c"): -0.2}
        )
        d = clf.pair_decisions(np.zeros((5, 2)))
        assert d.shape == (3, 5)
        np.testing.assert_allclose(d[:, 0], [0.3, 0.4, -0.2])


class TestEvalReport:
    def test_accuracy_identities(self):
        confusion = np.array([[8, 1, 1], [0, 9, 1], [2, 0, 8]])
        report = EvalReport(("a", "b", "c"), confusion)
        assert report.overall_accuracy == pytest.approx(25 / 30)
        assert report.per_label_accuracy == {
            "a": pytest.approx(0.8),
            "b": pytest.approx(0.9),
            "c": pytest.approx(0.8),
        }
        assert report.counts == {"a": 10, "b": 10, "c": 10}

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="shape"):
            EvalReport(("a", "b"), np.zeros((3, 3), dtype=int))
        with pytest.raises(ValueError, match="positive row count"):
            EvalReport(("a", "b"), np.array([[3, 0], [0, 0]]))

    def test_csv_output(self, tmp_path):
        report = EvalReport(("a", "b"), np.array([[4, 1], [2, 3]]))
        path = tmp_path / "eval.csv"
        write_eval_csv(report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "label,count,accuracy"
        assert lines[1] == "a,5,0.8"
        assert lines[2] == "b,5,0.6"
        assert lines[3] == "overall,10,0.7"

    def test_text_report(self):
        report = EvalReport(("a", "b"), np.array([[4, 1], [2, 3]]))
        text = format_eval_report(report)
        assert "Confusion matrix" in text
        assert "Overall accuracy: 70.0%" in text


class TestLoocv:
    def test_separable_clusters_are_perfect(self):
        X, y = cluster_data(3, per_class=6, seed=7)
        report = loocv(X, y)
        assert report.overall_accuracy == 1.0
        assert set(report.labels) == set(y)

    def test_standardizer_never_sees_held_out_row(self, monkeypatch):
        X, y = cluster_data(3, per_class=4, seed=8)
        n = X.shape[0]
        seen = []
        original = Standardizer.fit

        def spying_fit(self, rows):
            seen.append(np.asarray(rows).shape[0])
            return original(self, rows)

        monkeypatch.setattr(Standardizer, "fit", spying_fit)
        loocv(X, y)
        assert len(seen) == n
        assert all(count == n - 1 for count in seen)

    def test_template_is_cloned_not_mutated(self):
        X, y = cluster_data(3, per_class=4, seed=9)
        template = EmotionClassifier(kernel="linear")
        loocv(X, y, template)
        assert not hasattr(template, "pair_models_")

    def test_single_row_label_rejected(self):
        X, y = cluster_data(3, per_class=4, seed=10)
        X = np.vstack([X, np.zeros((1, X.shape[1]))])
        y = np.concatenate([y, ["epic"]])
        with pytest.raises(ValueError, match="only 1 row"):
            loocv(X, y)

    def test_template_and_params_are_exclusive(self):
        X, y = cluster_data(3, per_class=4, seed=11)
        with pytest.raises(ValueError, match="not both"):
            loocv(X, y, EmotionClassifier(), kernel="linear")

    def test_params_passthrough(self):
        X, y = cluster_data(3, per_class=4, seed=12)
        report = loocv(X, y, kernel="linear", C=5.0)
        assert report.overall_accuracy == 1.0


class TestModelFiles:
    def test_round_trip_predictions_identical(self, tmp_path):
        X, y = cluster_data(5, per_class=8, seed=13)
        clf = EmotionClassifier().fit(X, y)
        path = tmp_path / "model.json"
        save_model(clf, path)
        loaded = load_model(path)

        rng = np.random.default_rng(14)
        q = rng.uniform(-6.0, 6.0, (1000, X.shape[1]))
        np.testing.assert_array_equal(clf.predict(q), loaded.predict(q))
        # decision values survive the JSON round trip bit-for-bit
        np.testing.assert_array_equal(clf.pair_decisions(q), loaded.pair_decisions(q))

    def test_round_trip_preserves_structure(self, tmp_path):
        X, y = cluster_data(3, seed=15)
        clf = EmotionClassifier(kernel="linear", C=2.5, standardize=False).fit(X, y)
        path = tmp_path / "model.json"
        save_model(clf, path)
        loaded = load_model(path)
        assert loaded.kernel == "linear"
        assert loaded.C == 2.5
        assert loaded.standardizer_ is None
        assert list(loaded.classes_) == list(clf.classes_)
        assert loaded.gamma_ == clf.gamma_
        for (a1, b1, m1), (a2, b2, m2) in zip(clf.pair_models_, loaded.pair_models_):
            assert (a1, b1) == (a2, b2)
            np.testing.assert_array_equal(m1.support_vectors, m2.support_vectors)
            np.testing.assert_array_equal(m1.coef, m2.coef)
            assert m1.bias == m2.bias

    def test_unfitted_model_cannot_be_saved(self, tmp_path):
        with pytest.raises(ValueError, match="unfitted"):
            save_model(EmotionClassifier(), tmp_path / "model.json")

    def test_not_json(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("this is not json{")
        with pytest.raises(ModelFormatError, match="not a valid model file"):
            load_model(path)

    def test_wrong_format_tag(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"format": "something-else", "version": 1}))
        with pytest.raises(ModelFormatError, match="not a"):
            load_model(path)

    def test_unsupported_version(self, tmp_path):
        X, y = cluster_data(3, seed=16)
        clf = EmotionClassifier().fit(X, y)
        path = tmp_path / "model.json"
        save_model(clf, path)
        payload = json.loads(path.read_text())
        payload["version"] = 99
        path.write_text(json.dumps(payload))
        with pytest.raises(ModelFormatError, match="version"):
            load_model(path)

    def test_truncated_payload(self, tmp_path):
        X, y = cluster_data(3, seed=17)
        clf = EmotionClassifier().fit(X, y)
        path = tmp_path / "model.json"
        save_model(clf, path)
        payload = json.loads(path.read_text())
        del payload["pairs"][0]["coef"]
        path.write_text(json.dumps(payload))
        with pytest.raises(ModelFormatError, match="malformed"):
            load_model(path)
