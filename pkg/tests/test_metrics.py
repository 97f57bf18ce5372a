import numpy as np
import pytest

from dfdetect.errors import MetricUndefinedError, ValidationProblem
from dfdetect.metrics import (
    EvalRecord,
    balanced_accuracy,
    auc,
    evaluate_manifest,
    format_metrics_table,
    load_manifest,
    metrics_table_to_csv,
    DatasetManifest,
)
from dfdetect.types import ScoreReport


def records(real_scores, fake_scores):
    out = [EvalRecord(f"r{i}", "real", s) for i, s in enumerate(real_scores)]
    out += [EvalRecord(f"f{i}", "fake", s) for i, s in enumerate(fake_scores)]
    return out


def oracle_auc(real_scores, fake_scores):
    """Independent oracle: O(n^2) pair enumeration with half-credit ties."""
    wins = 0.0
    for f in fake_scores:
        for r in real_scores:
            if f > r:
                wins += 1.0
            elif f == r:
                wins += 0.5
    return wins / (len(real_scores) * len(fake_scores))


def oracle_balanced_accuracy(recs, threshold):
    """Independent oracle: explicit confusion matrix."""
    tp = fn = tn = fp = 0
    for rec in recs:
        predicted_fake = rec.score >= threshold
        if rec.label == "fake":
            tp += predicted_fake
            fn += not predicted_fake
        else:
            tn += not predicted_fake
            fp += predicted_fake
    return 100.0 * (tp / (tp + fn) + tn / (tn + fp)) / 2.0


class TestBalancedAccuracy:
    def test_perfect_classifier(self):
        assert balanced_accuracy(records([0.1, 0.2], [0.8, 0.9])) == 100.0

    def test_all_predicted_fake(self):
        assert balanced_accuracy(records([0.7, 0.9], [0.6, 0.8, 1.0])) == 50.0

    def test_mixed_recalls(self):
        # recall_real 0.8 (4/5 below threshold), recall_fake 0.6 (3/5 at or above)
        recs = records([0.1, 0.2, 0.3, 0.4, 0.9], [0.5, 0.6, 0.7, 0.1, 0.2])
        assert balanced_accuracy(recs) == pytest.approx(70.0)

    def test_threshold_boundary_counts_as_fake(self):
        recs = records([0.4], [0.5])
        assert balanced_accuracy(recs, threshold=0.5) == 100.0

    def test_missing_class(self):
        with pytest.raises(MetricUndefinedError):
            balanced_accuracy(records([0.1], []))

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(61)
        for _ in range(100):
            n_real = int(rng.integers(1, 50))
            n_fake = int(rng.integers(1, 50))
            recs = records(rng.random(n_real).tolist(), rng.random(n_fake).tolist())
            threshold = float(rng.uniform(0.1, 0.9))
            assert balanced_accuracy(recs, threshold) == \
                oracle_balanced_accuracy(recs, threshold)

    def test_balanced_set_equals_raw_accuracy(self):
        rng = np.random.default_rng(67)
        real = rng.random(20).tolist()
        fake = rng.random(20).tolist()
        recs = records(real, fake)
        correct = sum(1 for r in real if r < 0.5) + sum(1 for f in fake if f >= 0.5)
        assert balanced_accuracy(recs) == pytest.approx(100.0 * correct / 40)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(71)
        recs = records(rng.random(9).tolist(), rng.random(7).tolist())
        shuffled = list(recs)
        rng.shuffle(shuffled)
        assert balanced_accuracy(shuffled) == balanced_accuracy(recs)


class TestAuc:
    def test_perfect_separation(self):
        assert auc(records([0.1, 0.2, 0.3], [0.7, 0.8])) == 1.0

    def test_all_ties(self):
        assert auc(records([0.5, 0.5], [0.5, 0.5, 0.5])) == 0.5

    def test_worked_example(self):
        # pairs: (0.35>0.1)+, (0.35<0.4)-, (0.8>0.1)+, (0.8>0.4)+ -> 3/4
        assert auc(records([0.1, 0.4], [0.35, 0.8])) == pytest.approx(0.75)

    def test_missing_class(self):
        with pytest.raises(MetricUndefinedError):
            auc(records([], [0.5]))

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(73)
        for _ in range(100):
            n_real = int(rng.integers(1, 100))
            n_fake = int(rng.integers(1, 100))
            # quantized scores force plenty of ties
            real = (rng.integers(0, 10, n_real) / 10.0).tolist()
            fake = (rng.integers(0, 10, n_fake) / 10.0).tolist()
            got = auc(records(real, fake))
            assert got == pytest.approx(oracle_auc(real, fake), abs=1e-9)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(79)
        for _ in range(25):
            real = rng.random(30).tolist()
            fake = rng.random(20).tolist()
            base = auc(records(real, fake))

            def squash(x):
                return 1.0 / (1.0 + np.exp(-4.0 * (x - 0.5)))

            transformed = auc(records([float(squash(r)) for r in real],
                                      [float(squash(f)) for f in fake]))
            assert transformed == pytest.approx(base, abs=1e-9)


def fake_report(score):
    return ScoreReport(
        media_kind="image",
        overall=score,
        shots=(),
        pipeline_version="3.0.0",
        no_faces_detected=score is None,
    )


class TestManifestEvaluation:
    def manifest(self, entries):
        return DatasetManifest(name="synthetic", entries=tuple(entries))

    def test_hand_computable_metrics(self):
        scores = {"a": 0.1, "b": 0.2, "c": 0.9, "d": 0.8}
        manifest = self.manifest([
            ("a", "real", None), ("b", "real", None),
            ("c", "fake", None), ("d", "fake", None),
        ])
        table = evaluate_manifest(manifest, lambda m: fake_report(scores[m]))
        assert table[0].scope == "all"
        assert table[0].balanced_accuracy == 100.0
        assert table[0].auc == 1.0
        assert (table[0].n_real, table[0].n_fake, table[0].n_failed) == (2, 2, 0)

    def test_null_overall_counts_as_real_prediction(self):
        manifest = self.manifest([
            ("a", "real", None), ("b", "fake", None),
        ])
        table = evaluate_manifest(manifest, lambda m: fake_report(None))
        # both scored 0: recall_real 1, recall_fake 0
        assert table[0].balanced_accuracy == 50.0

    def test_missing_fake_class(self):
        manifest = self.manifest([("a", "real", None), ("b", "real", None)])
        with pytest.raises(MetricUndefinedError):
            evaluate_manifest(manifest, lambda m: fake_report(0.4))

    def test_per_manipulation_rows(self):
        scores = {"r1": 0.1, "r2": 0.3, "fs1": 0.9, "fs2": 0.4, "nt1": 0.2}
        manifest = self.manifest([
            ("r1", "real", None), ("r2", "real", None),
            ("fs1", "fake", "FaceSwap"), ("fs2", "fake", "FaceSwap"),
            ("nt1", "fake", "NeuralTextures"),
        ])
        table = evaluate_manifest(manifest, lambda m: fake_report(scores[m]))
        scopes = [row.scope for row in table]
        assert scopes == ["all", "FaceSwap", "NeuralTextures"]
        faceswap = table[1]
        # FaceSwap fakes (0.9, 0.4) vs shared reals (0.1, 0.3):
        # recall_fake 1/2, recall_real 2/2 -> 75%; AUC pairs: 0.9>both,
        # 0.4>0.1, 0.4>0.3 -> 4/4 = 1.0
        assert faceswap.balanced_accuracy == pytest.approx(75.0)
        assert faceswap.auc == pytest.approx(1.0)

    def test_failures_recorded_and_excluded(self):
        def analyze(m):
            if m == "bad":
                raise RuntimeError("decode failed")
            return fake_report(0.9 if m.startswith("f") else 0.1)

        manifest = self.manifest([
            ("r1", "real", None), ("f1", "fake", None), ("bad", "fake", None),
        ])
        table = evaluate_manifest(manifest, analyze)
        assert table[0].n_failed == 1
        assert (table[0].n_real, table[0].n_fake) == (1, 1)

    def test_csv_and_pretty_output(self):
        manifest = self.manifest([("a", "real", None), ("b", "fake", None)])
        table = evaluate_manifest(
            manifest, lambda m: fake_report(0.9 if m == "b" else 0.1))
        csv_text = metrics_table_to_csv(table)
        assert csv_text.splitlines()[0] == \
            "scope,n_real,n_fake,n_failed,balanced_accuracy,auc"
        assert "all,1,1,0,100.0000,1.000000" in csv_text
        pretty = format_metrics_table(table)
        assert "100.00%" in pretty


class TestManifestLoading:
    def test_load_with_tags(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("media,label,manipulation\n"
                        "a.avi,real,\n"
                        "b.avi,fake,FaceSwap\n")
        manifest = load_manifest(str(path))
        assert manifest.entries == (("a.avi", "real", None), ("b.avi", "fake", "FaceSwap"))

    def test_load_without_tags(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("media,label\na.png,real\nb.png,fake\n")
        manifest = load_manifest(str(path))
        assert manifest.entries == (("a.png", "real", None), ("b.png", "fake", None))

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("file,verdict\na,real\n")
        with pytest.raises(ValidationProblem):
            load_manifest(str(path))

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("media,label\na,genuine\n")
        with pytest.raises(ValidationProblem):
            load_manifest(str(path))
