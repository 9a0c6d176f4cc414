"""Class-conditional GAN with a mutual-information code head.

Each step runs three updates: discriminator on the adversarial loss, generator
on the non-saturating adversarial term, then the code-reconstruction (info)
term backpropagated into both the generator and the shared discriminator trunk
plus Q head. Codes are drawn from the standard-normal training prior; bounded
uniform sweeps are an evaluation-time convention (see codes.sample_codes).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from ..errors import InputError, TrainingDivergenceError
from ..factorworld.dataset import stack_images, stack_labels
from ..seeding import rng_for, torch_seed
from .codes import LatentCode
from .losses import code_prior_nll, gan_step_losses, info_loss
from .models import ConvDiscriminator, ConvGenerator, one_hot


@dataclass(frozen=True)
class InfoGanConfig:
    d_z: int = 32
    d_c: int = 10
    steps: int = 3000
    batch_size: int = 64
    lr_g: float = 1e-3
    lr_d: float = 2e-4
    info_weight: float = 1.0
    base_channels: int = 32
    seed: int = 0

    def __post_init__(self):
        if min(self.d_z, self.d_c, self.batch_size) <= 0 or self.steps < 0:
            raise InputError("d_z, d_c, batch_size must be positive and steps >= 0")
        if min(self.lr_g, self.lr_d, self.info_weight) < 0:
            raise InputError("learning rates and info_weight must be >= 0")


class InfoGanGenerator:
    """Trained (or freshly initialized) generator behind the handle interface."""

    def __init__(self, net: ConvGenerator, config: InfoGanConfig, n_classes: int, image_size: int):
        self.net = net.eval()
        self.config = config
        self.d_z = config.d_z
        self.d_c = config.d_c
        self.n_classes = n_classes
        self.image_size = image_size
        self.training_log: list[dict] = []

    @torch.no_grad()
    def generate(self, codes: Sequence[LatentCode]) -> np.ndarray:
        z = torch.as_tensor(np.stack([c.z for c in codes]), dtype=torch.float32)
        c = torch.as_tensor(np.stack([c.c for c in codes]), dtype=torch.float32)
        y = torch.as_tensor([c.y for c in codes])
        imgs = self.net(z, c, one_hot(y, self.n_classes))
        return imgs.permute(0, 2, 3, 1).numpy().astype(np.float32)

    def save(self, path: str | Path) -> None:
        torch.save(
            {
                "format_version": 1,
                "config": asdict(self.config),
                "n_classes": self.n_classes,
                "image_size": self.image_size,
                "state_dict": self.net.state_dict(),
                "training_log": self.training_log,
            },
            path,
        )


class QPredictor:
    """Code-reconstruction head over the discriminator trunk."""

    def __init__(self, net: ConvDiscriminator, n_classes: int):
        self.net = net.eval()
        self.n_classes = n_classes

    @torch.no_grad()
    def __call__(self, images: np.ndarray, labels: np.ndarray) -> np.ndarray:
        x = torch.as_tensor(np.asarray(images), dtype=torch.float32).permute(0, 3, 1, 2)
        y = one_hot(torch.as_tensor(np.asarray(labels)), self.n_classes)
        _, q = self.net(x, y)
        return q.numpy().astype(np.float64)


def load_generator(path: str | Path) -> InfoGanGenerator:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = InfoGanConfig(**payload["config"])
    net = ConvGenerator(config.d_z, config.d_c, payload["n_classes"], config.base_channels)
    net.load_state_dict(payload["state_dict"])
    handle = InfoGanGenerator(net, config, payload["n_classes"], payload["image_size"])
    handle.training_log = payload.get("training_log", [])
    return handle


def code_recovery_correlations(
    gen: InfoGanGenerator,
    q: QPredictor,
    n: int = 1000,
    seed: int = 0,
    batch_size: int = 250,
) -> np.ndarray:
    """Pearson correlation per code between fresh prior draws c_i and the
    reconstruction Q_i(G(z, c, y)); the discovery health check."""
    rng = rng_for(seed, "code-recovery")
    z = rng.standard_normal((n, gen.d_z))
    c = rng.standard_normal((n, gen.d_c))
    y = rng.integers(0, gen.n_classes, n)
    preds = []
    for start in range(0, n, batch_size):
        codes = [
            LatentCode(z=z[j], c=c[j], y=int(y[j])) for j in range(start, min(n, start + batch_size))
        ]
        images = gen.generate(codes)
        preds.append(q(images, y[start : start + len(codes)]))
    q_out = np.concatenate(preds)
    corr = np.zeros(gen.d_c)
    for i in range(gen.d_c):
        corr[i] = np.corrcoef(c[:, i], q_out[:, i])[0, 1]
    return corr


def train_infogan(
    dataset,
    config: InfoGanConfig,
    checkpoint_dir: str | Path | None = None,
) -> tuple[InfoGanGenerator, QPredictor]:
    """Fit the conditional info-GAN on a labeled sample list.

    Returns the generator handle (with per-step training log attached) and the
    code predictor. Non-finite losses abort with a diagnostic checkpoint when
    ``checkpoint_dir`` is given.
    """
    if len(dataset) == 0:
        raise InputError("dataset must be non-empty")
    images = stack_images(dataset)
    labels = stack_labels(dataset)
    n_classes = int(labels.max()) + 1
    image_size = images.shape[1]

    torch.manual_seed(torch_seed(config.seed, "gan-init"))
    g_net = ConvGenerator(config.d_z, config.d_c, n_classes, config.base_channels)
    d_net = ConvDiscriminator(config.d_c, n_classes, config.base_channels)

    opt_g = torch.optim.Adam(g_net.parameters(), lr=config.lr_g, betas=(0.5, 0.999))
    opt_d = torch.optim.Adam(d_net.parameters(), lr=config.lr_d, betas=(0.5, 0.999))
    opt_info = torch.optim.Adam(
        list(g_net.parameters()) + list(d_net.parameters()), lr=config.lr_g, betas=(0.5, 0.999)
    )

    rng = rng_for(config.seed, "gan-batches")
    latent_gen = torch.Generator().manual_seed(torch_seed(config.seed, "gan-latents"))
    label_pool = torch.as_tensor(labels)
    log: list[dict] = []

    def draw_latents(n: int):
        z = torch.randn(n, config.d_z, generator=latent_gen)
        c = torch.randn(n, config.d_c, generator=latent_gen)
        y = label_pool[torch.randint(len(label_pool), (n,), generator=latent_gen)]
        return z, c, y

    g_net.train()
    d_net.train()
    for step in range(config.steps):
        idx = rng.integers(0, len(images), config.batch_size)
        real = torch.as_tensor(images[idx]).permute(0, 3, 1, 2)
        real_y = one_hot(torch.as_tensor(labels[idx]), n_classes)

        # discriminator
        z, c, y = draw_latents(config.batch_size)
        y_oh = one_hot(y, n_classes)
        with torch.no_grad():
            fake = g_net(z, c, y_oh)
        opt_d.zero_grad(set_to_none=True)
        d_real, _ = d_net(real, real_y)
        d_fake, _ = d_net(fake, y_oh)
        d_loss, _, _ = gan_step_losses(d_real, d_fake, torch.zeros_like(c), c, 0.0)
        d_loss.backward()
        opt_d.step()

        # generator (non-saturating adversarial term)
        z, c, y = draw_latents(config.batch_size)
        y_oh = one_hot(y, n_classes)
        opt_g.zero_grad(set_to_none=True)
        fake = g_net(z, c, y_oh)
        d_fake, _ = d_net(fake, y_oh)
        g_adv = -torch.log(d_fake.clamp(1e-6, 1.0 - 1e-6)).mean()
        g_adv.backward()
        opt_g.step()

        # info term, into G and Q (shared trunk included)
        z, c, y = draw_latents(config.batch_size)
        y_oh = one_hot(y, n_classes)
        opt_info.zero_grad(set_to_none=True)
        fake = g_net(z, c, y_oh)
        _, q_out = d_net(fake, y_oh)
        info = info_loss(c, q_out)
        (config.info_weight * info).backward()
        opt_info.step()

        d_val, g_adv_val, info_val = (float(t.detach()) for t in (d_loss, g_adv, info))
        g_val = g_adv_val + config.info_weight * info_val
        if not all(np.isfinite(v) for v in (d_val, g_val, info_val)):
            diagnostics = {"step": step, "d_loss": d_val, "g_loss": g_val, "info": info_val}
            if checkpoint_dir is not None:
                ckpt = Path(checkpoint_dir)
                ckpt.mkdir(parents=True, exist_ok=True)
                torch.save(
                    {"g": g_net.state_dict(), "d": d_net.state_dict(), "diagnostics": diagnostics},
                    ckpt / "diverged.pt",
                )
                with open(ckpt / "diverged.json", "w") as f:
                    json.dump(diagnostics, f)
                diagnostics["checkpoint"] = str(ckpt / "diverged.pt")
            raise TrainingDivergenceError(f"non-finite losses at step {step}", diagnostics)
        log.append(
            {
                "step": step,
                "d_loss": d_val,
                "g_loss": g_val,
                "info": info_val,
                "code_prior_nll": float(code_prior_nll(c)),
            }
        )

    handle = InfoGanGenerator(g_net, config, n_classes, image_size)
    handle.training_log = log
    return handle, QPredictor(d_net, n_classes)
