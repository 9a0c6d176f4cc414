"""Semantic consistency: predictions should not move when one code moves.

The regularizer draws counterfactual image pairs differing only in code i and
penalizes the KL divergence between the classifier's outputs on the pair, the
unmodified image's prediction acting as the reference distribution. A
symmetric variant averages both directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import InputError, TrainingDivergenceError
from ..factorworld.dataset import stack_images, stack_labels
from ..generative.codes import CODE_SWEEP_RANGE, LatentCode, sample_codes
from ..generative.handles import GeneratorHandle, counterfactual_batch
from ..seeding import derive_seed, rng_for
from ..task.classifier import ClassifierConfig, ClassifierHandle, batch_plan, init_model

PROB_EPS = 1e-6


@dataclass(frozen=True)
class ScConfig:
    classifier: ClassifierConfig
    weight: float = 1.0
    code_batch: int = 32
    symmetric: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.weight < 0 or self.code_batch <= 0:
            raise InputError("sc weight must be >= 0 and code_batch > 0")


def kl_div(p: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
    """Mean KL(p || q) over rows, probabilities clamped to [eps, 1-eps]."""
    p = p.clamp(PROB_EPS, 1.0 - PROB_EPS)
    q = q.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return (p * (torch.log(p) - torch.log(q))).sum(dim=-1).mean()


def _pair_probs(clf: ClassifierHandle, gen: GeneratorHandle, codes, i: int, rng) -> tuple:
    c_primes = rng.uniform(CODE_SWEEP_RANGE[0], CODE_SWEEP_RANGE[1], len(codes))
    originals, modified = counterfactual_batch(gen, codes, i, c_primes)
    x = torch.as_tensor(np.concatenate([originals, modified]), dtype=torch.float32)
    x = x.permute(0, 3, 1, 2)
    probs = clf.torch_probs(x)
    return probs[: len(codes)], probs[len(codes) :]


def sc_loss(
    clf: ClassifierHandle,
    gen: GeneratorHandle,
    codes: list[LatentCode],
    i: int,
    seed: int = 0,
    symmetric: bool = False,
) -> torch.Tensor:
    """Mean prediction divergence over counterfactual pairs replacing code i
    with a fresh uniform draw. Differentiable w.r.t. the classifier."""
    if len(codes) == 0:
        raise InputError("codes batch must be non-empty")
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")
    rng = rng_for(seed, "sc-replacements")
    p, q = _pair_probs(clf, gen, codes, i, rng)
    if symmetric:
        return 0.5 * (kl_div(p, q) + kl_div(q, p))
    return kl_div(p, q)


def train_sc(train_set: list, gen: GeneratorHandle, i: int, config: ScConfig) -> ClassifierHandle:
    """Task cross-entropy on real data plus the consistency penalty on fresh
    synthetic code batches each step."""
    if len(train_set) == 0:
        raise InputError("train_set must be non-empty")
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")

    images = stack_images(train_set)
    labels = stack_labels(train_set)
    n_classes = int(labels.max()) + 1
    label_dist = np.bincount(labels, minlength=n_classes) / len(labels)

    ccfg = config.classifier
    model = init_model(ccfg, n_classes)
    opt = torch.optim.Adam(model.parameters(), lr=ccfg.lr)
    x_all = torch.as_tensor(images).permute(0, 3, 1, 2)
    y_all = torch.as_tensor(labels)

    handle = ClassifierHandle(
        model, ccfg, {"intervention": "SC", "code_index": i, "sc_weight": config.weight}
    )
    history = []
    model.train()
    step = 0
    for epoch, idx in batch_plan(len(train_set), ccfg):
        opt.zero_grad(set_to_none=True)
        task_loss = F.cross_entropy(model(x_all[idx]), y_all[idx])
        loss = task_loss
        consistency = float("nan")
        if config.weight > 0:
            codes = sample_codes(
                config.code_batch,
                gen.d_z,
                gen.d_c,
                gen.n_classes,
                label_dist,
                "uniform-eval",
                derive_seed(config.seed, "sc-codes", step),
            )
            sc_term = sc_loss(
                handle, gen, codes, i, seed=derive_seed(config.seed, "sc-prime", step),
                symmetric=config.symmetric,
            )
            consistency = float(sc_term.detach())
            loss = loss + config.weight * sc_term
        if not torch.isfinite(loss):
            raise TrainingDivergenceError(
                f"non-finite SC loss at step {step}", {"step": step, "epoch": epoch}
            )
        loss.backward()
        opt.step()
        history.append(
            {"step": step, "epoch": epoch, "task_loss": float(task_loss.detach()), "consistency": consistency}
        )
        step += 1

    handle.history = history
    handle.metadata["n_train"] = len(train_set)
    return handle
