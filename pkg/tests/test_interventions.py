import math

import numpy as np
import pytest
import scipy.stats
import torch

from factorbench.errors import InputError
from factorbench.factorworld import stack_images
from factorbench.generative.codes import sample_codes
from factorbench.interventions import (
    AaConfig,
    InterventionConfig,
    InterventionContext,
    ScConfig,
    aa_training_mix,
    adversary_step,
    apply_intervention,
    augment_da,
    kl_div,
    sc_loss,
    train_aa,
    train_sc,
)
from factorbench.interventions.adversarial import AdversaryHead
from factorbench.task import ClassifierConfig, train_classifier


@pytest.fixture(scope="module")
def tiny_train(plain_spec):
    from factorbench.factorworld import generate_dataset

    return generate_dataset(plain_spec, 150, seed=77)


class TestAugmentDa:
    def test_appended_count_default_multiplier(self, tiny_train, plain_oracle_gen, uniform_labels):
        out = augment_da(tiny_train, plain_oracle_gen, 3, test_size=40, multiplier=10,
                         label_dist=uniform_labels, seed=0)
        assert len(out) == len(tiny_train) + 400

    def test_ceiling_rounds_up(self, tiny_train, plain_oracle_gen, uniform_labels):
        out = augment_da(tiny_train, plain_oracle_gen, 3, test_size=100, multiplier=0.001,
                         label_dist=uniform_labels, seed=0)
        assert len(out) == len(tiny_train) + 1

    def test_originals_untouched(self, tiny_train, plain_oracle_gen, uniform_labels):
        out = augment_da(tiny_train, plain_oracle_gen, 3, test_size=10, multiplier=1,
                         label_dist=uniform_labels, seed=0)
        for orig, kept in zip(tiny_train, out):
            assert kept is orig  # prefix preserved by identity, nothing mutated

    def test_mapped_factor_uniform_coverage(self, plain_spec, plain_oracle_gen, uniform_labels):
        out = augment_da([], plain_oracle_gen, 3, test_size=1000, multiplier=10,
                         label_dist=uniform_labels, seed=5)
        j = plain_spec.factor_index("brightness")
        fspec = plain_spec.factor("brightness")
        values = np.array([s.factors[j] for s in out])
        stat = scipy.stats.kstest(values, "uniform", args=(fspec.low, fspec.high - fspec.low)).statistic
        assert stat < 0.05

    def test_zero_multiplier_rejected(self, tiny_train, plain_oracle_gen, uniform_labels):
        with pytest.raises(InputError):
            augment_da(tiny_train, plain_oracle_gen, 3, 10, 0.0, uniform_labels, 0)


class TestKlAndScLoss:
    def test_identical_distributions_zero(self):
        p = torch.tensor([[0.2, 0.8], [0.5, 0.5]])
        assert float(kl_div(p, p)) == pytest.approx(0.0, abs=1e-9)

    def test_direct_value(self):
        p = torch.tensor([[0.9, 0.1]])
        q = torch.tensor([[0.1, 0.9]])
        assert float(kl_div(p, q)) == pytest.approx(0.8 * math.log(9.0), rel=1e-6)

    def test_sc_loss_noop_replacement_zero(self, plain_oracle_gen, tiny_train, uniform_labels):
        clf = train_classifier(tiny_train, ClassifierConfig(epochs=0, seed=0))
        codes = sample_codes(8, plain_oracle_gen.d_z, 10, 5, uniform_labels, "uniform-eval", 3)
        # replacement for an unmapped code changes no pixels, so KL must be 0
        v = sc_loss(clf, plain_oracle_gen, codes, 9, seed=1)
        assert float(v.detach()) == pytest.approx(0.0, abs=1e-9)

    def test_sc_loss_nonnegative(self, plain_oracle_gen, tiny_train, uniform_labels):
        clf = train_classifier(tiny_train, ClassifierConfig(epochs=1, batch_size=64, seed=0))
        codes = sample_codes(8, plain_oracle_gen.d_z, 10, 5, uniform_labels, "uniform-eval", 3)
        assert float(sc_loss(clf, plain_oracle_gen, codes, 3, seed=1).detach()) >= 0.0

    def test_sc_loss_gradient_matches_finite_differences(self):
        # gradient of the divergence w.r.t. classifier logits on both branches
        torch.manual_seed(0)
        logits = torch.randn(3, 5, dtype=torch.float64, requires_grad=True)
        logits_cf = torch.randn(3, 5, dtype=torch.float64)

        def value(lg):
            p = torch.softmax(lg, dim=1)
            q = torch.softmax(logits_cf, dim=1)
            return kl_div(p, q)

        value(logits).backward()
        analytic = logits.grad.numpy().copy()
        eps = 1e-6
        fd = np.zeros_like(analytic)
        base = logits.detach().numpy()
        for idx in np.ndindex(*base.shape):
            hi, lo = base.copy(), base.copy()
            hi[idx] += eps
            lo[idx] -= eps
            fd[idx] = (float(value(torch.tensor(hi))) - float(value(torch.tensor(lo)))) / (2 * eps)
        assert np.allclose(analytic, fd, rtol=1e-4, atol=1e-8)

    def test_symmetric_variant_averages_both_directions(self, plain_oracle_gen, tiny_train, uniform_labels):
        clf = train_classifier(tiny_train, ClassifierConfig(epochs=1, batch_size=64, seed=6))
        codes = sample_codes(8, plain_oracle_gen.d_z, 10, 5, uniform_labels, "uniform-eval", 4)
        forward = float(sc_loss(clf, plain_oracle_gen, codes, 1, seed=3).detach())
        sym = float(sc_loss(clf, plain_oracle_gen, codes, 1, seed=3, symmetric=True).detach())
        reverse_plus_forward = sym * 2 - forward
        assert sym >= 0 and reverse_plus_forward >= 0

    def test_empty_codes_rejected(self, plain_oracle_gen, tiny_train):
        clf = train_classifier(tiny_train, ClassifierConfig(epochs=0, seed=0))
        with pytest.raises(InputError):
            sc_loss(clf, plain_oracle_gen, [], 3)


class TestDegenerateReductions:
    def test_aa_weight_zero_equals_plain_training_on_mix(self, tiny_train, plain_oracle_gen):
        ccfg = ClassifierConfig(epochs=1, batch_size=64, seed=21)
        config = AaConfig(classifier=ccfg, weight=0.0, synth_size=150, seed=4)
        aa = train_aa(tiny_train, plain_oracle_gen, 3, config)
        mixed, _ = aa_training_mix(tiny_train, plain_oracle_gen, 3, config)
        plain = train_classifier(mixed, ccfg)
        for a, b in zip(aa.model.state_dict().values(), plain.model.state_dict().values()):
            assert torch.equal(a, b)

    def test_sc_weight_zero_equals_plain_training(self, tiny_train, plain_oracle_gen):
        ccfg = ClassifierConfig(epochs=1, batch_size=64, seed=22)
        sc = train_sc(tiny_train, plain_oracle_gen, 3, ScConfig(classifier=ccfg, weight=0.0, seed=4))
        plain = train_classifier(tiny_train, ccfg)
        for a, b in zip(sc.model.state_dict().values(), plain.model.state_dict().values()):
            assert torch.equal(a, b)


class TestAlternationIsolation:
    def test_adversary_step_leaves_classifier_untouched_and_vice_versa(self, tiny_train, plain_oracle_gen):
        ccfg = ClassifierConfig(epochs=1, batch_size=32, seed=5)
        from factorbench.task.classifier import init_model

        model = init_model(ccfg, 5)
        torch.manual_seed(0)
        adversary = AdversaryHead(model.embed_dim, 5, 10)
        opt_adv = torch.optim.Adam(adversary.parameters(), lr=1e-3)
        opt_clf = torch.optim.Adam(model.parameters(), lr=1e-3)

        x = torch.as_tensor(stack_images(tiny_train[:16])).permute(0, 3, 1, 2)
        y = torch.as_tensor([s.label for s in tiny_train[:16]])
        y_oh = torch.nn.functional.one_hot(y, 5).float()
        bins = torch.randint(0, 10, (16,))

        clf_before = {k: v.clone() for k, v in model.state_dict().items()}
        adv_before = {k: v.clone() for k, v in adversary.state_dict().items()}
        adversary_step(model, adversary, opt_adv, x, y_oh, bins)
        assert all(torch.equal(clf_before[k], v) for k, v in model.state_dict().items())
        assert not all(torch.equal(adv_before[k], v) for k, v in adversary.state_dict().items())

        adv_mid = {k: v.clone() for k, v in adversary.state_dict().items()}
        model.train()
        opt_clf.zero_grad()
        logits, emb = model.forward_with_embedding(x)
        loss = torch.nn.functional.cross_entropy(logits, y) - 0.5 * torch.nn.functional.cross_entropy(
            adversary(emb, y_oh), bins
        )
        loss.backward()
        opt_clf.step()
        assert all(torch.equal(adv_mid[k], v) for k, v in adversary.state_dict().items())
        assert not all(torch.equal(clf_before[k], v) for k, v in model.state_dict().items())


@pytest.fixture(scope="module")
def sensitive_setup(sensitive_spec, full_oracle_gen):
    from factorbench.factorworld import generate_dataset

    train = generate_dataset(sensitive_spec, 2000, seed=88)
    ccfg = ClassifierConfig(epochs=4, batch_size=128, seed=88)
    baseline = train_classifier(train, ccfg)
    return train, ccfg, baseline


class TestEffectiveness:
    """Pilot-calibrated behavioral checks on the sensitive factor world."""

    def test_sc_training_lowers_consistency_loss(self, sensitive_setup, full_oracle_gen, uniform_labels):
        train, ccfg, baseline = sensitive_setup
        sc = train_sc(train, full_oracle_gen, 1, ScConfig(classifier=ccfg, weight=1.0, code_batch=16, seed=9))
        codes = sample_codes(128, full_oracle_gen.d_z, full_oracle_gen.d_c, 5,
                             uniform_labels, "uniform-eval", 1234)
        base_v = float(sc_loss(baseline, full_oracle_gen, codes, 1, seed=77).detach())
        sc_v = float(sc_loss(sc, full_oracle_gen, codes, 1, seed=77).detach())
        assert sc_v < base_v

    def test_alternation_keeps_adversary_down(self, sensitive_setup, full_oracle_gen):
        # co-trained adversary ends below an identical-budget adversary that
        # trained against the frozen baseline
        from factorbench.interventions.adversarial import train_adversary_frozen

        train, ccfg, baseline = sensitive_setup
        cfg = AaConfig(classifier=ccfg, weight=1.0, seed=9)
        aa = train_aa(train, full_oracle_gen, 1, cfg)
        frozen_acc = train_adversary_frozen(train, baseline, full_oracle_gen, 1, cfg)
        assert aa.metadata["adversary_holdout_acc"] < frozen_acc
        assert frozen_acc > 0.15  # the baseline embedding does leak the code


class TestDispatch:
    def make_context(self, tiny_train, gen):
        return InterventionContext(
            train_set=tiny_train,
            generator=gen,
            classifier_config=ClassifierConfig(epochs=1, batch_size=64, seed=9),
            test_size=20,
            n_classes=5,
        )

    def test_da_metadata_records_augmented_size(self, tiny_train, plain_oracle_gen):
        ctx = self.make_context(tiny_train, plain_oracle_gen)
        cfg = InterventionConfig(kind="DA", factor_index=3, da_multiplier=2.0, seed=1)
        handle = apply_intervention(cfg, ctx)
        assert handle.metadata["augmented_size"] == len(tiny_train) + 40
        assert handle.metadata["intervention_hash"] == cfg.hash()

    def test_invalid_kind_rejected(self):
        with pytest.raises(InputError):
            InterventionConfig(kind="XX", factor_index=0)

    def test_each_kind_dispatches(self, tiny_train, plain_oracle_gen):
        ctx = self.make_context(tiny_train, plain_oracle_gen)
        for kind in ("DA", "AA", "SC"):
            cfg = InterventionConfig(
                kind=kind, factor_index=3, da_multiplier=1.0, aa_weight=0.5, sc_weight=0.5,
                sc_code_batch=8, seed=2,
            )
            handle = apply_intervention(cfg, ctx)
            assert handle.metadata["intervention_config"]["kind"] == kind

    def test_out_of_range_code_rejected(self, tiny_train, plain_oracle_gen):
        ctx = self.make_context(tiny_train, plain_oracle_gen)
        with pytest.raises(InputError):
            apply_intervention(InterventionConfig(kind="DA", factor_index=10), ctx)
