"""Loss terms for the mutual-information GAN.

The continuous-code reconstruction term is a unit-variance Gaussian negative
log-likelihood, i.e. squared error: 0.5 * ||c - q||^2 per sample. The code
prior's log-density is constant w.r.t. parameters under a fixed prior, so it
is excluded from the optimized value and reported separately for logging.
"""

from __future__ import annotations

import math

import torch

from ..errors import InputError, TrainingDivergenceError

PROB_EPS = 1e-6


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def info_loss(c, q_out) -> torch.Tensor:
    """0.5 * squared error between codes and their reconstruction.

    Accepts a single code vector (d,) or a batch (n, d); batches are averaged.
    """
    c = _as_tensor(c)
    q_out = _as_tensor(q_out)
    if c.shape != q_out.shape:
        raise InputError(f"code/reconstruction shape mismatch: {tuple(c.shape)} vs {tuple(q_out.shape)}")
    per_sample = 0.5 * ((c - q_out) ** 2).sum(dim=-1)
    return per_sample.mean() if per_sample.dim() > 0 else per_sample


def code_prior_nll(c) -> torch.Tensor:
    """Standard-normal negative log-density of codes (logging only)."""
    c = _as_tensor(c)
    per_sample = 0.5 * (c**2).sum(dim=-1) + 0.5 * c.shape[-1] * math.log(2 * math.pi)
    return per_sample.mean() if per_sample.dim() > 0 else per_sample


def gan_step_losses(
    d_real,
    d_fake,
    q_out,
    codes,
    info_weight: float = 1.0,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Discriminator/generator/info losses from one step's model outputs.

    d_real, d_fake are discriminator probabilities on real and generated
    batches; q_out is the code reconstruction for the generated batch. All
    probabilities are clamped to [eps, 1-eps] before the logs. Returns
    (d_loss, g_loss, info) where g_loss uses the non-saturating generator
    term plus info_weight * info.
    """
    d_real = _as_tensor(d_real).reshape(-1)
    d_fake = _as_tensor(d_fake).reshape(-1)
    if d_real.numel() == 0 or d_fake.numel() == 0:
        raise InputError("empty discriminator output batch")
    for name, t in (("d_real", d_real), ("d_fake", d_fake), ("q_out", _as_tensor(q_out))):
        if not torch.isfinite(t).all():
            raise TrainingDivergenceError(f"non-finite model outputs in {name}")

    d_real = d_real.clamp(PROB_EPS, 1.0 - PROB_EPS)
    d_fake = d_fake.clamp(PROB_EPS, 1.0 - PROB_EPS)
    d_loss = -torch.log(d_real).mean() - torch.log(1.0 - d_fake).mean()
    info = info_loss(codes, q_out)
    g_loss = -torch.log(d_fake).mean() + info_weight * info
    return d_loss, g_loss, info
