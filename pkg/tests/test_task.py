import numpy as np
import pytest
import torch

from factorbench.errors import InputError
from factorbench.factorworld import stack_images, stack_labels
from factorbench.task import ClassifierConfig, ClassifierHandle, train_classifier


@pytest.fixture(scope="module")
def trained(small_dataset):
    return train_classifier(small_dataset, ClassifierConfig(epochs=2, batch_size=64, seed=3))


class TestPredict:
    def test_rows_are_distributions(self, trained, small_dataset):
        probs = trained.predict(stack_images(small_dataset[:32]))
        assert probs.shape == (32, 5)
        assert np.all(probs >= 0) and np.all(probs <= 1)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)

    def test_duplicated_rows_identical(self, trained, small_dataset):
        img = small_dataset[0].image
        probs = trained.predict(np.stack([img, img, img]))
        assert np.array_equal(probs[0], probs[1])
        assert np.array_equal(probs[1], probs[2])

    def test_batch_size_preserved(self, trained, small_dataset):
        for n in (1, 7, 65):
            probs = trained.predict(stack_images(small_dataset[:n]))
            assert probs.shape[0] == n

    def test_wrong_shape_rejected(self, trained):
        with pytest.raises(InputError):
            trained.predict(np.zeros((4, 32, 32)))


class TestEmbed:
    def test_dimension_is_final_width(self, trained, small_dataset):
        emb = trained.embed(stack_images(small_dataset[:8]))
        assert emb.shape == (8, trained.config.widths[-1])

    def test_identical_images_identical_embeddings(self, trained, small_dataset):
        img = small_dataset[0].image
        emb = trained.embed(np.stack([img, img]))
        assert np.array_equal(emb[0], emb[1])

    def test_linear_head_reproduces_predict(self, trained, small_dataset):
        images = stack_images(small_dataset[:16])
        emb = trained.embed(images)
        w, b = trained.linear_head()
        logits = emb @ w.T + b
        probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        assert np.allclose(probs, trained.predict(images), rtol=1e-5, atol=1e-6)


class TestTraining:
    def test_zero_epochs_chance_level(self, plain_spec, small_dataset):
        from factorbench.factorworld import generate_dataset

        clf = train_classifier(small_dataset, ClassifierConfig(epochs=0, seed=1))
        test = generate_dataset(plain_spec, 1000, seed=555)
        probs = clf.predict(stack_images(test))
        acc = 100.0 * (probs.argmax(1) == stack_labels(test)).mean()
        assert abs(acc - 20.0) <= 5.0

    def test_seeded_reproducibility(self, small_dataset):
        cfg = ClassifierConfig(epochs=1, batch_size=64, seed=11)
        a = train_classifier(small_dataset, cfg)
        b = train_classifier(small_dataset, cfg)
        for ka, kb in zip(a.model.state_dict().values(), b.model.state_dict().values()):
            assert torch.equal(ka, kb)

    def test_different_seeds_differ(self, small_dataset):
        a = train_classifier(small_dataset, ClassifierConfig(epochs=1, batch_size=64, seed=1))
        b = train_classifier(small_dataset, ClassifierConfig(epochs=1, batch_size=64, seed=2))
        same = all(
            torch.equal(x, y) for x, y in zip(a.model.state_dict().values(), b.model.state_dict().values())
        )
        assert not same

    def test_history_logged(self, trained):
        assert len(trained.history) > 0
        assert {"step", "epoch", "loss"} <= set(trained.history[0])

    def test_empty_train_set_rejected(self):
        with pytest.raises(InputError):
            train_classifier([], ClassifierConfig())

    def test_bad_labels_rejected(self, small_dataset):
        bad = [type(s)(image=s.image, label=7, factors=s.factors) for s in small_dataset[:4]]
        with pytest.raises(InputError):
            train_classifier(bad, ClassifierConfig(epochs=1), n_classes=5)

    def test_nonfinite_data_aborts_training(self, small_dataset):
        from factorbench.errors import TrainingDivergenceError
        from factorbench.factorworld import Sample

        poisoned = list(small_dataset[:64])
        bad = np.full((32, 32, 3), np.nan, dtype=np.float32)
        poisoned[0] = Sample(image=bad, label=0, factors=poisoned[0].factors)
        with pytest.raises(TrainingDivergenceError):
            train_classifier(poisoned, ClassifierConfig(epochs=1, batch_size=64, seed=0))


class TestPilotFloors:
    def test_clean_world_accuracy_floor(self):
        # desk-scale floor: 5k train / 1k test, no injected sensitivity
        from factorbench.factorworld import default_spec, generate_dataset

        spec = default_spec()
        train = generate_dataset(spec, 5000, seed=400)
        test = generate_dataset(spec, 1000, seed=401)
        clf = train_classifier(train, ClassifierConfig(epochs=6, batch_size=128, seed=400))
        probs = clf.predict(stack_images(test))
        acc = 100.0 * (probs.argmax(1) == stack_labels(test)).mean()
        assert acc >= 95.0

    def test_injected_sensitivity_opens_gap(self):
        from factorbench.factorworld import bin_assign, default_spec, generate_dataset
        from factorbench.metrics import bundle_from_predictions

        spec = default_spec(sensitive_factor="brightness", sensitivity=0.8)
        train = generate_dataset(spec, 3000, seed=402)
        test = generate_dataset(spec, 1000, seed=403)
        clf = train_classifier(train, ClassifierConfig(epochs=6, batch_size=128, seed=402))
        probs = clf.predict(stack_images(test))
        j = spec.factor_index("brightness")
        values = np.array([s.factors[j] for s in test])
        fspec = spec.factor("brightness")
        bundle = bundle_from_predictions(
            probs, stack_labels(test), bin_assign(values, 10, (fspec.low, fspec.high))
        )
        assert bundle.acc_gap >= 10.0


class TestCheckpoint:
    def test_round_trip(self, trained, small_dataset, tmp_path):
        path = tmp_path / "clf.pt"
        trained.save(path)
        again = ClassifierHandle.load(path)
        assert again.metadata["config_hash"] == trained.metadata["config_hash"]
        assert again.metadata["seed"] == trained.config.seed
        images = stack_images(small_dataset[:8])
        assert np.array_equal(again.predict(images), trained.predict(images))

    def test_metadata_header_present(self, trained, tmp_path):
        path = tmp_path / "clf.pt"
        trained.save(path)
        payload = torch.load(path, map_location="cpu", weights_only=False)
        assert payload["format_version"] == 1
        assert "config_hash" in payload and "seed" in payload
