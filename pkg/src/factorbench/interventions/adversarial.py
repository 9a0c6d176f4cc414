"""Adversarial alignment: make pooled embeddings uninformative about one code.

An adversary head receives (pooled embedding, one-hot task label) and predicts
the targeted code's value discretized into equal-width bins over [-2, 2].
Training alternates per batch: (a) the adversary fits frozen embeddings of the
batch's synthetic samples, (b) the classifier minimizes task cross-entropy on
the full real+synthetic batch minus aa_weight times the adversary's loss.
Real images carry no code value, so only synthetic samples feed the adversary.

The classifier's init/batch RNG streams are exactly those of plain training,
so aa_weight=0 reproduces train_classifier on the same mixed set bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import InputError, TrainingDivergenceError
from ..factorworld.binning import bin_assign
from ..factorworld.dataset import stack_images, stack_labels
from ..generative.codes import CODE_SWEEP_RANGE
from ..generative.handles import GeneratorHandle, sample_synthetic
from ..seeding import derive_seed, rng_for, torch_seed
from ..task.classifier import ClassifierConfig, ClassifierHandle, batch_plan, init_model


@dataclass(frozen=True)
class AaConfig:
    classifier: ClassifierConfig
    weight: float = 1.0
    bins: int = 10
    synth_size: int | None = None  # defaults to len(train_set): a 1:1 real/synthetic mix
    adversary_lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.weight < 0 or self.bins < 2:
            raise InputError("aa weight must be >= 0 and bins >= 2")


class AdversaryHead(nn.Module):
    """MLP predicting the binned code value from (embedding, one-hot label)."""

    def __init__(self, embed_dim: int, n_classes: int, n_bins: int, hidden: int = 128):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(embed_dim + n_classes, hidden),
            nn.ReLU(inplace=True),
            nn.Linear(hidden, n_bins),
        )

    def forward(self, embedding: torch.Tensor, y_onehot: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([embedding, y_onehot], dim=1))


def aa_training_mix(train_set: list, gen: GeneratorHandle, i: int, config: AaConfig):
    """(mixed sample list, per-sample code values with NaN for real samples).

    Exposed so the degenerate-weight reduction can be checked against plain
    training on the identical mix.
    """
    labels = stack_labels(train_set)
    n_classes = int(labels.max()) + 1
    label_dist = np.bincount(labels, minlength=n_classes) / len(labels)
    n_synth = config.synth_size if config.synth_size is not None else len(train_set)
    synth = sample_synthetic(
        gen, n_synth, label_dist, c_dist="uniform-eval", seed=derive_seed(config.seed, "aa-synth")
    )
    mixed = list(train_set) + [s for s, _ in synth]
    code_values = np.concatenate(
        [np.full(len(train_set), np.nan), np.array([code.c[i] for _, code in synth])]
    )
    return mixed, code_values


def adversary_step(
    model,
    adversary: AdversaryHead,
    opt_adv: torch.optim.Optimizer,
    x: torch.Tensor,
    y_onehot: torch.Tensor,
    bin_targets: torch.Tensor,
) -> float:
    """Update the adversary on frozen embeddings; classifier state untouched."""
    was_training = model.training
    model.eval()
    with torch.no_grad():
        emb = model.embed(x)
    if was_training:
        model.train()
    opt_adv.zero_grad(set_to_none=True)
    loss = F.cross_entropy(adversary(emb, y_onehot), bin_targets)
    loss.backward()
    opt_adv.step()
    return float(loss.detach())


def _adversary_holdout_accuracy(
    model,
    adversary: AdversaryHead,
    gen: GeneratorHandle,
    i: int,
    n_classes: int,
    bins: int,
    seed: int,
    n: int = 1000,
) -> float:
    """Held-out accuracy of an adversary head over a classifier's embeddings."""
    label_dist = np.full(n_classes, 1.0 / n_classes)
    pool = sample_synthetic(gen, n, label_dist, c_dist="uniform-eval", seed=seed)
    images = stack_images([s for s, _ in pool])
    labels = stack_labels([s for s, _ in pool])
    targets = bin_assign(np.array([code.c[i] for _, code in pool]), bins, CODE_SWEEP_RANGE).assignment

    was_training = model.training
    model.eval()
    with torch.no_grad():
        emb = model.embed(torch.as_tensor(images).permute(0, 3, 1, 2))
        y_oh = F.one_hot(torch.as_tensor(labels), n_classes).float()
        pred = adversary(emb, y_oh).argmax(dim=1)
    if was_training:
        model.train()
    return float((pred == torch.as_tensor(targets)).float().mean())


def train_adversary_frozen(
    train_set: list, clf: ClassifierHandle, gen: GeneratorHandle, i: int, config: AaConfig
) -> float:
    """Train an adversary with train_aa's exact batch schedule but against the
    frozen classifier; returns its held-out accuracy. The comparison point for
    the co-trained adversary reported by train_aa (blindness check)."""
    mixed, code_values = aa_training_mix(train_set, gen, i, config)
    images = stack_images(mixed)
    labels = stack_labels(mixed)
    n_classes = int(labels.max()) + 1
    is_synth = np.isfinite(code_values)
    bin_targets_all = np.zeros(len(mixed), dtype=np.int64)
    bin_targets_all[is_synth] = bin_assign(code_values[is_synth], config.bins, CODE_SWEEP_RANGE).assignment

    torch.manual_seed(torch_seed(config.seed, "aa-adv-init"))
    adversary = AdversaryHead(clf.model.embed_dim, n_classes, config.bins)
    opt_adv = torch.optim.Adam(adversary.parameters(), lr=config.adversary_lr)

    x_all = torch.as_tensor(images).permute(0, 3, 1, 2)
    y_oh_all = F.one_hot(torch.as_tensor(labels), n_classes).float()
    bins_all = torch.as_tensor(bin_targets_all)
    synth_mask_all = torch.as_tensor(is_synth)
    for _, idx in batch_plan(len(mixed), config.classifier):
        idx_t = torch.as_tensor(idx)
        mask = synth_mask_all[idx_t]
        if mask.any():
            adversary_step(
                clf.model, adversary, opt_adv,
                x_all[idx_t][mask], y_oh_all[idx_t][mask], bins_all[idx_t][mask],
            )
    return _adversary_holdout_accuracy(
        clf.model, adversary, gen, i, n_classes, config.bins,
        seed=derive_seed(config.seed, "aa-holdout"),
    )


def train_aa(train_set: list, gen: GeneratorHandle, i: int, config: AaConfig) -> ClassifierHandle:
    """Alternating adversary/classifier optimization targeting code i."""
    if len(train_set) == 0:
        raise InputError("train_set must be non-empty")
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")

    mixed, code_values = aa_training_mix(train_set, gen, i, config)
    images = stack_images(mixed)
    labels = stack_labels(mixed)
    n_classes = int(labels.max()) + 1

    is_synth = np.isfinite(code_values)
    bin_targets_all = np.zeros(len(mixed), dtype=np.int64)
    if is_synth.any():
        bin_targets_all[is_synth] = bin_assign(
            code_values[is_synth], config.bins, CODE_SWEEP_RANGE
        ).assignment

    ccfg = config.classifier
    model = init_model(ccfg, n_classes)
    torch.manual_seed(torch_seed(config.seed, "aa-adv-init"))
    adversary = AdversaryHead(model.embed_dim, n_classes, config.bins)

    opt_clf = torch.optim.Adam(model.parameters(), lr=ccfg.lr)
    opt_adv = torch.optim.Adam(adversary.parameters(), lr=config.adversary_lr)

    x_all = torch.as_tensor(images).permute(0, 3, 1, 2)
    y_all = torch.as_tensor(labels)
    y_oh_all = F.one_hot(y_all, n_classes).float()
    bins_all = torch.as_tensor(bin_targets_all)
    synth_mask_all = torch.as_tensor(is_synth)

    history = []
    model.train()
    step = 0
    for epoch, idx in batch_plan(len(mixed), ccfg):
        idx_t = torch.as_tensor(idx)
        x, y = x_all[idx_t], y_all[idx_t]
        y_oh, bins_t = y_oh_all[idx_t], bins_all[idx_t]
        synth_mask = synth_mask_all[idx_t]

        adv_loss = float("nan")
        if synth_mask.any():
            adv_loss = adversary_step(
                model, adversary, opt_adv, x[synth_mask], y_oh[synth_mask], bins_t[synth_mask]
            )

        opt_clf.zero_grad(set_to_none=True)
        logits, emb = model.forward_with_embedding(x)
        task_loss = F.cross_entropy(logits, y)
        loss = task_loss
        if config.weight > 0 and synth_mask.any():
            adv_logits = adversary(emb[synth_mask], y_oh[synth_mask])
            loss = loss - config.weight * F.cross_entropy(adv_logits, bins_t[synth_mask])
        if not torch.isfinite(loss):
            raise TrainingDivergenceError(
                f"non-finite AA loss at step {step}", {"step": step, "epoch": epoch}
            )
        loss.backward()
        opt_clf.step()
        history.append(
            {"step": step, "epoch": epoch, "task_loss": float(task_loss.detach()), "adversary_loss": adv_loss}
        )
        step += 1

    holdout_acc = _adversary_holdout_accuracy(
        model, adversary, gen, i, n_classes, config.bins,
        seed=derive_seed(config.seed, "aa-holdout"),
    )
    handle = ClassifierHandle(
        model,
        ccfg,
        {
            "intervention": "AA",
            "code_index": i,
            "aa_weight": config.weight,
            "aa_bins": config.bins,
            "n_train_mixed": len(mixed),
            "adversary_holdout_acc": holdout_acc,
        },
    )
    handle.history = history
    return handle


def probe_code_readout(
    clf: ClassifierHandle,
    gen: GeneratorHandle,
    i: int,
    n_bins: int = 10,
    n_train: int = 2000,
    n_test: int = 1000,
    steps: int = 300,
    seed: int = 0,
) -> float:
    """Held-out accuracy of a fresh adversary trained on frozen embeddings.

    Measures how much code-i information the classifier's embedding still
    carries; lower means blinder.
    """
    label_dist = np.full(gen.n_classes, 1.0 / gen.n_classes)
    pool = sample_synthetic(
        gen, n_train + n_test, label_dist, c_dist="uniform-eval", seed=derive_seed(seed, "probe")
    )
    images = stack_images([s for s, _ in pool])
    labels = stack_labels([s for s, _ in pool])
    c_vals = np.array([code.c[i] for _, code in pool])
    bins = bin_assign(c_vals, n_bins, CODE_SWEEP_RANGE).assignment

    emb = torch.as_tensor(clf.embed(images), dtype=torch.float32)
    y_oh = F.one_hot(torch.as_tensor(labels), gen.n_classes).float()
    targets = torch.as_tensor(bins)

    torch.manual_seed(torch_seed(seed, "probe-init"))
    adversary = AdversaryHead(emb.shape[1], gen.n_classes, n_bins)
    opt = torch.optim.Adam(adversary.parameters(), lr=1e-2)
    rng = rng_for(seed, "probe-batches")
    tr = slice(0, n_train)
    for _ in range(steps):
        idx = torch.as_tensor(rng.integers(0, n_train, 256))
        opt.zero_grad(set_to_none=True)
        loss = F.cross_entropy(adversary(emb[tr][idx], y_oh[tr][idx]), targets[tr][idx])
        loss.backward()
        opt.step()
    with torch.no_grad():
        pred = adversary(emb[n_train:], y_oh[n_train:]).argmax(dim=1)
    return float((pred == targets[n_train:]).float().mean())
