import numpy as np
import pytest

from factorbench.errors import InputError
from factorbench.factorworld import generate_dataset
from factorbench.harness import (
    acai_select,
    generalization_setting,
    real_factor_partition,
    sensitivity_scan,
    unsupervised_setting,
)
from factorbench.harness.runner import ensure_disjoint_splits
from factorbench.task import ClassifierConfig, train_classifier


class StubClassifier:
    """Predicts a canned label per known image (matched by pixel bytes)."""

    def __init__(self, samples, predicted, n_classes=5):
        self.lookup = {s.image.tobytes(): int(p) for s, p in zip(samples, predicted)}
        self.n_classes = n_classes

    def predict(self, images):
        out = np.zeros((len(images), self.n_classes))
        for row, img in enumerate(np.asarray(images, dtype=np.float32)):
            out[row, self.lookup[img.tobytes()]] = 1.0
        return out


def stub_with_bin_accuracy(samples, partition, acc_per_bin, n_classes=5):
    """Stub whose per-bin accuracy is exactly acc_per_bin (fractions)."""
    predicted = [s.label for s in samples]
    for b in range(partition.n_bins):
        idx = np.nonzero(partition.assignment == b)[0]
        n_wrong = round(len(idx) * (1.0 - acc_per_bin[b]))
        for j in idx[:n_wrong]:
            predicted[j] = (samples[j].label + 1) % n_classes
    return StubClassifier(samples, predicted, n_classes)


@pytest.fixture(scope="module")
def trained_baseline(sensitive_spec):
    train = generate_dataset(sensitive_spec, 3000, seed=31)
    return train_classifier(train, ClassifierConfig(epochs=6, batch_size=128, seed=31))


class TestSensitivityScan:
    def test_ranking_is_permutation_sorted_by_gap(self, trained_baseline, oracle_gen, uniform_labels):
        ranked = sensitivity_scan(trained_baseline, oracle_gen, uniform_labels, 300, seed=1)
        codes = [c for c, _ in ranked]
        assert sorted(codes) == list(range(10))
        gaps = [b.acc_gap for _, b in ranked]
        assert gaps == sorted(gaps, reverse=True)

    def test_injected_factor_ranks_first(self, trained_baseline, full_oracle_gen, uniform_labels):
        ranked = sensitivity_scan(trained_baseline, full_oracle_gen, uniform_labels, 800, seed=2)
        assert ranked[0][0] == 1  # code 1 drives the attenuated brightness factor
        assert ranked[0][1].acc_gap > 1.3 * ranked[1][1].acc_gap

    def test_synthetic_size_is_ten_times_test_size(self, trained_baseline, oracle_gen, uniform_labels):
        ranked = sensitivity_scan(trained_baseline, oracle_gen, uniform_labels, 120, seed=3)
        assert int(ranked[0][1].bin_counts.sum()) == 1200

    def test_unmapped_code_gap_near_zero(self, plain_spec, plain_oracle_gen, uniform_labels):
        # no injected sensitivity and a strong classifier: an ignored code's
        # gap is pure sampling noise
        train = generate_dataset(plain_spec, 2000, seed=55)
        clf = train_classifier(train, ClassifierConfig(epochs=4, batch_size=128, seed=55))
        ranked = sensitivity_scan(clf, plain_oracle_gen, uniform_labels, 1000, seed=4)
        by_code = dict(ranked)
        for unmapped in (5, 9):
            assert by_code[unmapped].acc_gap < 2.0


class TestUnsupervisedSetting:
    def test_row_structure_and_baseline_cai(self, trained_baseline, oracle_gen, uniform_labels):
        intervened = {"DA-3": trained_baseline, "AA-3": trained_baseline, "SC-3": trained_baseline}
        rows = unsupervised_setting(trained_baseline, intervened, oracle_gen, 3,
                                    uniform_labels, 200, seed=5)
        assert [r.name for r in rows] == ["Base", "DA-3", "AA-3", "SC-3"]
        base = rows[0]
        assert base.cai_05 == 0.0 and base.cai_75 == 0.0
        for r in rows[1:]:  # stub interventions are the baseline itself
            assert r.acc == base.acc and r.acc_gap == base.acc_gap
            assert r.cai_05 == 0.0 and r.cai_75 == 0.0


class TestGeneralizationSetting:
    def test_partition_shared_and_zero_sensitivity_factor_flat(self, plain_spec, uniform_labels):
        # benign factor (position_x): baseline gap stays at sampling-noise
        # level and a stub identical to the baseline moves CAI by nothing
        train = generate_dataset(plain_spec, 4000, seed=56)
        test = generate_dataset(plain_spec, 6000, seed=57)
        clf = train_classifier(train, ClassifierConfig(epochs=6, batch_size=128, seed=56))
        rows = generalization_setting(clf, {"DA-7": clf}, test, plain_spec, "position_x")
        assert rows[0].acc_gap < 2.0
        assert abs(rows[1].cai_05) < 1.0

    def test_real_factor_partition_manifest_edges(self, plain_spec):
        test = generate_dataset(plain_spec, 300, seed=58)
        part = real_factor_partition(test, plain_spec, "brightness")
        fspec = plain_spec.factor("brightness")
        assert part.edges[0] == fspec.low and part.edges[-1] == fspec.high

    def test_computed_brightness_source(self, plain_spec):
        test = generate_dataset(plain_spec, 200, seed=59)
        part = real_factor_partition(test, plain_spec, "brightness", source="computed_brightness")
        assert part.counts().sum() == 200
        assert 0.0 <= part.edges[0] < part.edges[-1] <= 100.0


class TestAcaiSelect:
    def make_grid(self, samples, partition, profiles):
        stubs = {
            key: stub_with_bin_accuracy(samples, partition, acc) for key, acc in profiles.items()
        }
        return lambda code, kind: stubs[(code, kind)]

    def test_canned_best_candidate_selected(self, plain_spec):
        val = generate_dataset(plain_spec, 400, seed=60)
        part = real_factor_partition(val, plain_spec, "brightness", n_bins=4)
        n = part.n_bins
        baseline = stub_with_bin_accuracy(val, part, [0.9, 0.85, 0.8, 0.75])
        profiles = {
            (1, "DA"): [0.9] * n,              # small gap, good acc
            (4, "DA"): [0.97] * n,             # best: high acc, zero gap
            (1, "AA"): [0.8, 0.8, 0.8, 0.78],
            (4, "SC"): [0.7, 0.9, 0.7, 0.9],
        }
        candidates = list(profiles)
        selected, grid = acai_select(
            candidates, val, plain_spec, "brightness", baseline,
            self.make_grid(val, part, profiles), n_bins=4, min_count=10,
        )
        assert selected == (4, "DA")
        # exhaustiveness: selection equals the argmax over the stored column
        best = max(grid, key=lambda g: (g["val_cai_05"], g["val_acc"], -g["code"], -g["order"]))
        assert (best["code"], best["kind"]) == selected
        assert len(grid) == len(candidates)

    def test_tie_breaks_prefer_accuracy_then_lower_code(self, plain_spec):
        val = generate_dataset(plain_spec, 400, seed=61)
        part = real_factor_partition(val, plain_spec, "brightness", n_bins=4)
        baseline = stub_with_bin_accuracy(val, part, [0.8] * 4)
        # same gap (0) for all; (2, "AA") has highest accuracy
        profiles = {
            (5, "DA"): [0.9] * 4,
            (2, "AA"): [0.95] * 4,
            (7, "SC"): [0.9] * 4,
        }
        selected, _ = acai_select(
            list(profiles), val, plain_spec, "brightness", baseline,
            self.make_grid(val, part, profiles), n_bins=4, min_count=10,
        )
        assert selected == (2, "AA")

        # exact tie on (cai, acc): lower code index wins
        profiles = {(5, "DA"): [0.9] * 4, (2, "AA"): [0.9] * 4}
        selected, _ = acai_select(
            list(profiles), val, plain_spec, "brightness", baseline,
            self.make_grid(val, part, profiles), n_bins=4, min_count=10,
        )
        assert selected == (2, "AA")

    def test_single_candidate(self, plain_spec):
        val = generate_dataset(plain_spec, 200, seed=62)
        part = real_factor_partition(val, plain_spec, "brightness", n_bins=4)
        baseline = stub_with_bin_accuracy(val, part, [0.8] * 4)
        profiles = {(0, "SC"): [0.7] * 4}
        selected, grid = acai_select(
            list(profiles), val, plain_spec, "brightness", baseline,
            self.make_grid(val, part, profiles), n_bins=4, min_count=10,
        )
        assert selected == (0, "SC") and len(grid) == 1

    def test_empty_grid_rejected(self, plain_spec):
        val = generate_dataset(plain_spec, 50, seed=63)
        with pytest.raises(InputError):
            acai_select([], val, plain_spec, "brightness", None, lambda c, k: None)


class TestDisjointness:
    def test_overlapping_splits_rejected(self, plain_spec):
        ds = generate_dataset(plain_spec, 10, seed=70)
        with pytest.raises(InputError):
            ensure_disjoint_splits({"train": ds, "test": ds[5:]})

    def test_disjoint_splits_pass(self, plain_spec):
        a = generate_dataset(plain_spec, 10, seed=70)
        b = generate_dataset(plain_spec, 10, seed=71)
        ensure_disjoint_splits({"train": a, "test": b})
