"""Data augmentation intervention: top up training data with generator samples.

All codes are drawn uniformly from [-2, 2] so the synthetic set covers the
targeted code's whole sweep evenly; the conditioning label doubles as the
supervision label. Original training samples are never touched.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InputError
from ..generative.handles import GeneratorHandle, sample_synthetic


def augment_da(
    train_set: list,
    gen: GeneratorHandle,
    i: int,
    test_size: int,
    multiplier: float,
    label_dist: np.ndarray,
    seed: int,
) -> list:
    """Return train_set plus ceil(multiplier * test_size) synthetic samples."""
    if multiplier <= 0:
        raise InputError(f"multiplier must be > 0, got {multiplier}")
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")
    n_new = math.ceil(multiplier * test_size)
    synth = sample_synthetic(gen, n_new, label_dist, c_dist="uniform-eval", seed=seed)
    return list(train_set) + [sample for sample, _ in synth]
