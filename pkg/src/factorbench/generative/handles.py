"""Controllable-generator interface plus code-space operations built on it.

A generator handle is anything with (d_z, d_c, n_classes, image_size) metadata
and a deterministic ``generate(codes) -> images`` routine; the learned GAN
generator and the oracle renderer both satisfy it. Counterfactual pairs,
synthetic sampling and traversal montages only use this surface.
"""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from ..errors import InputError
from ..factorworld.spec import Sample
from ..seeding import rng_for
from .codes import CODE_SWEEP_RANGE, LatentCode, sample_codes


@runtime_checkable
class GeneratorHandle(Protocol):
    d_z: int
    d_c: int
    n_classes: int
    image_size: int

    def generate(self, codes: Sequence[LatentCode]) -> np.ndarray:
        """(n, H, W, 3) float images in [0, 1]; deterministic per code."""
        ...


def sample_synthetic(
    gen: GeneratorHandle,
    n: int,
    label_dist: np.ndarray,
    c_dist: str = "uniform-eval",
    seed: int = 0,
    batch_size: int = 256,
) -> list[tuple[Sample, LatentCode]]:
    """Draw n synthetic samples, each paired with the code that generated it.

    Labels follow ``label_dist`` exactly (largest-remainder allocation); codes
    follow ``c_dist``. When the generator knows true factor values for a code
    (the oracle does), they are attached to the returned samples.
    """
    if n <= 0:
        raise InputError(f"n must be > 0, got {n}")
    codes = sample_codes(n, gen.d_z, gen.d_c, gen.n_classes, label_dist, c_dist, seed)
    factors_for = getattr(gen, "factors_for", None)
    out = []
    for start in range(0, n, batch_size):
        chunk = codes[start : start + batch_size]
        images = gen.generate(chunk)
        factors = factors_for(chunk) if factors_for is not None else [None] * len(chunk)
        for img, code, f in zip(images, chunk, factors):
            out.append((Sample(image=img, label=code.y, factors=f), code))
    return out


def counterfactual(
    gen: GeneratorHandle,
    code: LatentCode,
    i: int,
    c_prime: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Images for ``code`` and for the same code with c[i] replaced by c_prime."""
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")
    pair = gen.generate([code, code.replace_code(i, c_prime)])
    return pair[0], pair[1]


def counterfactual_batch(
    gen: GeneratorHandle,
    codes: Sequence[LatentCode],
    i: int,
    c_primes: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized counterfactual pairs: one replacement value per code."""
    if len(c_primes) != len(codes):
        raise InputError("need one replacement value per code")
    originals = gen.generate(codes)
    modified = gen.generate([code.replace_code(i, float(v)) for code, v in zip(codes, c_primes)])
    return originals, modified


def traversal_grid(
    gen: GeneratorHandle,
    i: int,
    n_steps: int,
    n_images: int,
    seed: int = 0,
    return_codes: bool = False,
):
    """Montage sweeping c[i] over [-2, 2]: n_images rows (fixed z, y per row),
    n_steps columns, emitted as one (n_images*H, n_steps*W, 3) array."""
    if n_steps < 2:
        raise InputError(f"n_steps must be >= 2, got {n_steps}")
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")
    rng = rng_for(seed, "traversal")
    base_codes = []
    for row in range(n_images):
        base_codes.append(
            LatentCode(
                z=rng.standard_normal(gen.d_z),
                c=rng.uniform(CODE_SWEEP_RANGE[0], CODE_SWEEP_RANGE[1], gen.d_c),
                y=row % gen.n_classes,
            )
        )
    sweep = np.linspace(CODE_SWEEP_RANGE[0], CODE_SWEEP_RANGE[1], n_steps)
    rows = []
    for code in base_codes:
        images = gen.generate([code.replace_code(i, float(v)) for v in sweep])
        rows.append(np.concatenate(list(images), axis=1))
    grid = np.concatenate(rows, axis=0)
    if return_codes:
        return grid, base_codes
    return grid


def save_montage(grid: np.ndarray, path) -> None:
    from PIL import Image

    arr = np.clip(np.rint(np.asarray(grid) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)
