"""Latent code records and code/label sampling conventions.

Two code distributions exist: the training prior (standard normal, what the
generator is fit under) and the bounded evaluation sweep (uniform on [-2, 2])
used for augmentation, counterfactual evaluation and traversals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..seeding import rng_for

CODE_SWEEP_RANGE = (-2.0, 2.0)

C_DISTRIBUTIONS = ("uniform-eval", "training-prior")


@dataclass(frozen=True)
class LatentCode:
    """(nuisance noise z, info codes c, class y) driving one generation."""

    z: np.ndarray
    c: np.ndarray
    y: int

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=np.float64))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=np.float64))
        if not np.all(np.isfinite(self.c)):
            raise InputError("code vector c must be finite")

    @property
    def d_c(self) -> int:
        return len(self.c)

    def replace_code(self, i: int, value: float) -> "LatentCode":
        """New code identical except c[i] = value."""
        if not 0 <= i < self.d_c:
            raise InputError(f"code index {i} outside [0, {self.d_c})")
        c = self.c.copy()
        c[i] = value
        return LatentCode(z=self.z, c=c, y=self.y)


def allocate_labels(n: int, label_dist: np.ndarray) -> np.ndarray:
    """Exact per-class counts by largest-remainder rounding of n * label_dist."""
    label_dist = np.asarray(label_dist, dtype=np.float64)
    if np.any(label_dist < 0) or abs(label_dist.sum() - 1.0) > 1e-8:
        raise InputError("label_dist must be non-negative and sum to 1")
    ideal = n * label_dist
    counts = np.floor(ideal).astype(np.int64)
    remainder = n - counts.sum()
    if remainder > 0:
        # ties broken toward lower class index
        order = np.lexsort((np.arange(len(ideal)), -(ideal - counts)))
        counts[order[:remainder]] += 1
    return counts


def sample_codes(
    n: int,
    d_z: int,
    d_c: int,
    n_classes: int,
    label_dist: np.ndarray,
    c_dist: str,
    seed: int,
) -> list[LatentCode]:
    """Draw n latent codes: z standard normal, c per ``c_dist``, labels stratified
    to ``label_dist`` by largest-remainder allocation then shuffled."""
    if c_dist not in C_DISTRIBUTIONS:
        raise InputError(f"c_dist must be one of {C_DISTRIBUTIONS}, got {c_dist!r}")
    counts = allocate_labels(n, label_dist)
    if len(counts) != n_classes:
        raise InputError(f"label_dist has {len(counts)} classes, expected {n_classes}")
    labels = np.repeat(np.arange(n_classes), counts)

    rng = rng_for(seed, "codes")
    rng.shuffle(labels)
    z = rng.standard_normal((n, d_z))
    if c_dist == "uniform-eval":
        c = rng.uniform(CODE_SWEEP_RANGE[0], CODE_SWEEP_RANGE[1], (n, d_c))
    else:
        c = rng.standard_normal((n, d_c))
    return [LatentCode(z=z[i], c=c[i], y=int(labels[i])) for i in range(n)]
