"""Dataset generation and directory persistence.

Each sample draws from its own RNG stream keyed on (seed, index), so
generation is order-independent and could be parallelized across indices.
On disk a dataset is a directory of 8-bit PNGs plus manifest.csv
(index,label,factor_0..factor_{F-1}) and spec.json.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import InputError
from ..seeding import derive_seed
from .render import render
from .spec import DatasetSpec, FactorSpec, Sample


def generate_dataset(
    spec: DatasetSpec,
    n: int,
    seed: int,
    label_dist: np.ndarray | None = None,
) -> list[Sample]:
    """Draw n samples with factors uniform over their ranges.

    Labels are uniform over classes unless ``label_dist`` gives explicit
    class probabilities. Pure function of (spec, n, seed, label_dist).
    """
    if n <= 0:
        raise InputError(f"n must be > 0, got {n}")
    if label_dist is not None:
        label_dist = np.asarray(label_dist, dtype=np.float64)
        if label_dist.shape != (spec.n_classes,) or np.any(label_dist < 0):
            raise InputError("label_dist must be non-negative with one entry per class")
        if abs(label_dist.sum() - 1.0) > 1e-8:
            raise InputError(f"label_dist must sum to 1, got {label_dist.sum()}")
        label_cdf = np.cumsum(label_dist)

    lows = np.array([f.low for f in spec.factors])
    highs = np.array([f.high for f in spec.factors])

    samples = []
    for index in range(n):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), index)))
        factors = lows + rng.uniform(0.0, 1.0, spec.n_factors) * (highs - lows)
        if label_dist is None:
            label = int(rng.integers(0, spec.n_classes))
        else:
            label = int(np.searchsorted(label_cdf, rng.uniform(), side="right"))
            label = min(label, spec.n_classes - 1)
        samples.append(render(factors, label, spec, derive_seed(seed, "sample", index)))
    return samples


def label_distribution(samples: list[Sample], n_classes: int) -> np.ndarray:
    """Empirical class distribution of a sample list."""
    counts = np.bincount([s.label for s in samples], minlength=n_classes).astype(np.float64)
    return counts / counts.sum()


def stack_images(samples: list[Sample]) -> np.ndarray:
    return np.stack([s.image for s in samples]).astype(np.float32)


def stack_labels(samples: list[Sample]) -> np.ndarray:
    return np.array([s.label for s in samples], dtype=np.int64)


def factor_column(samples: list[Sample], index: int) -> np.ndarray:
    missing = [i for i, s in enumerate(samples) if s.factors is None]
    if missing:
        raise InputError(f"{len(missing)} samples carry no ground-truth factors")
    return np.array([s.factors[index] for s in samples], dtype=np.float64)


def save_dataset(samples: list[Sample], spec: DatasetSpec, seed: int, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(samples):
        arr = np.clip(np.rint(s.image * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(arr).save(out / f"{i:08d}.png")
    with open(out / "manifest.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "label"] + [f"factor_{j}" for j in range(spec.n_factors)])
        for i, s in enumerate(samples):
            writer.writerow([i, s.label] + [f"{v:.17g}" for v in s.factors])
    with open(out / "spec.json", "w") as f:
        json.dump(spec_to_dict(spec, seed), f, indent=2)
    return out


def spec_to_dict(spec: DatasetSpec, seed: int | None = None) -> dict:
    d = {
        "image_size": spec.image_size,
        "n_classes": spec.n_classes,
        "noise_sigma": spec.noise_sigma,
        "factors": [
            {
                "name": f.name,
                "low": f.low,
                "high": f.high,
                "render_effect": f.render_effect,
                "sensitivity_strength": f.sensitivity_strength,
            }
            for f in spec.factors
        ],
    }
    if seed is not None:
        d["seed"] = seed
    return d


def spec_from_dict(d: dict) -> DatasetSpec:
    factors = tuple(
        FactorSpec(f["name"], (f["low"], f["high"]), f["render_effect"], f.get("sensitivity_strength", 0.0))
        for f in d["factors"]
    )
    return DatasetSpec(
        factors=factors,
        n_classes=d["n_classes"],
        image_size=d["image_size"],
        noise_sigma=d.get("noise_sigma", 0.0),
    )


def load_dataset(path: str | Path) -> tuple[list[Sample], DatasetSpec, int | None]:
    path = Path(path)
    with open(path / "spec.json") as f:
        spec_dict = json.load(f)
    spec = spec_from_dict(spec_dict)
    samples = []
    with open(path / "manifest.csv", newline="") as f:
        for row in csv.DictReader(f):
            idx = int(row["index"])
            img = np.asarray(Image.open(path / f"{idx:08d}.png"), dtype=np.float32) / 255.0
            factors = np.array([float(row[f"factor_{j}"]) for j in range(spec.n_factors)])
            samples.append(Sample(image=img, label=int(row["label"]), factors=factors))
    return samples, spec, spec_dict.get("seed")
