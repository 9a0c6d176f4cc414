"""Task classifier training, inference and checkpointing.

The training loop is deliberately exposed in pieces (init_model, batch_plan)
so intervention trainers can interleave their own updates while consuming the
exact same RNG streams; with a zero intervention weight they then reproduce
plain training bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import InputError, TrainingDivergenceError
from ..factorworld.dataset import stack_images, stack_labels
from ..seeding import rng_for, torch_seed
from .model import SmallCnn

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassifierConfig:
    epochs: int = 6
    batch_size: int = 128
    lr: float = 1e-3
    widths: tuple[int, ...] = (32, 64, 96, 128)
    seed: int = 0
    recipe_id: str = "smallcnn-v1"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size <= 0 or self.lr < 0:
            raise InputError("epochs >= 0, batch_size > 0 and lr >= 0 required")


def config_hash(config) -> str:
    payload = json.dumps(asdict(config), sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


class ClassifierHandle:
    """Trained classifier with probability and pooled-embedding access."""

    def __init__(self, model: SmallCnn, config: ClassifierConfig, metadata: dict | None = None):
        self.model = model.eval()
        self.config = config
        self.metadata = {"config_hash": config_hash(config), "seed": config.seed, **(metadata or {})}
        self.history: list[dict] = []

    @property
    def n_classes(self) -> int:
        return self.model.n_classes

    def _check_images(self, images: np.ndarray) -> torch.Tensor:
        images = np.asarray(images, dtype=np.float32)
        if images.ndim != 4 or images.shape[3] != 3:
            raise InputError(f"expected (n, H, W, 3) images, got shape {images.shape}")
        return torch.as_tensor(images).permute(0, 3, 1, 2)

    @torch.no_grad()
    def predict(self, images: np.ndarray, batch_size: int = 512) -> np.ndarray:
        x = self._check_images(images)
        probs = []
        for start in range(0, len(x), batch_size):
            logits = self.model(x[start : start + batch_size])
            probs.append(F.softmax(logits, dim=1))
        return torch.cat(probs).numpy().astype(np.float64)

    @torch.no_grad()
    def embed(self, images: np.ndarray, batch_size: int = 512) -> np.ndarray:
        x = self._check_images(images)
        out = []
        for start in range(0, len(x), batch_size):
            out.append(self.model.embed(x[start : start + batch_size]))
        return torch.cat(out).numpy().astype(np.float64)

    def torch_probs(self, images: torch.Tensor) -> torch.Tensor:
        """Differentiable class probabilities for (n, 3, H, W) tensors."""
        return F.softmax(self.model(images), dim=1)

    def linear_head(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            self.model.head.weight.detach().numpy().astype(np.float64),
            self.model.head.bias.detach().numpy().astype(np.float64),
        )

    def save(self, path: str | Path) -> None:
        torch.save(
            {
                "format_version": CHECKPOINT_FORMAT_VERSION,
                "config_hash": self.metadata["config_hash"],
                "seed": self.config.seed,
                "config": asdict(self.config),
                "metadata": self.metadata,
                "n_classes": self.n_classes,
                "state_dict": self.model.state_dict(),
                "history": self.history,
            },
            path,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierHandle":
        payload = torch.load(path, map_location="cpu", weights_only=False)
        if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise InputError(f"unsupported checkpoint format: {payload.get('format_version')}")
        cfg = payload["config"]
        cfg["widths"] = tuple(cfg["widths"])
        config = ClassifierConfig(**cfg)
        model = SmallCnn(payload["n_classes"], config.widths)
        model.load_state_dict(payload["state_dict"])
        handle = cls(model, config, payload["metadata"])
        handle.history = payload.get("history", [])
        return handle


def init_model(config: ClassifierConfig, n_classes: int) -> SmallCnn:
    torch.manual_seed(torch_seed(config.seed, "clf-init"))
    return SmallCnn(n_classes, config.widths)


def batch_plan(n: int, config: ClassifierConfig):
    """Deterministic (epoch, index-array) schedule shared by all trainers."""
    rng = rng_for(config.seed, "clf-batches")
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            yield epoch, perm[start : start + config.batch_size]


def train_classifier(
    train_set,
    config: ClassifierConfig,
    n_classes: int | None = None,
    metadata: dict | None = None,
) -> ClassifierHandle:
    """Cross-entropy training of the small CNN; logs the loss curve."""
    if len(train_set) == 0:
        raise InputError("train_set must be non-empty")
    images = stack_images(train_set)
    labels = stack_labels(train_set)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InputError(f"labels must lie in [0, {n_classes})")

    model = init_model(config, n_classes)
    opt = torch.optim.Adam(model.parameters(), lr=config.lr)
    x_all = torch.as_tensor(images).permute(0, 3, 1, 2)
    y_all = torch.as_tensor(labels)

    history = []
    model.train()
    step = 0
    for epoch, idx in batch_plan(len(train_set), config):
        opt.zero_grad(set_to_none=True)
        logits = model(x_all[idx])
        loss = F.cross_entropy(logits, y_all[idx])
        if not torch.isfinite(loss):
            raise TrainingDivergenceError(
                f"non-finite task loss at step {step}", {"step": step, "epoch": epoch}
            )
        loss.backward()
        opt.step()
        history.append({"step": step, "epoch": epoch, "loss": float(loss.detach())})
        step += 1

    handle = ClassifierHandle(model, config, {"n_train": len(train_set), **(metadata or {})})
    handle.history = history
    return handle
