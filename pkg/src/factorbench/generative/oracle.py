"""Oracle generator: codes mapped straight onto ground-truth render factors.

Perfectly disentangled by construction, which removes GAN training noise from
any verification that only needs a controllable generator. Mapped codes drive
their factor through an affine map from [-2, 2] onto the factor range (values
outside are clamped); unmapped codes are ignored; unmapped factors sit at
their range midpoints. The render noise seed derives from z alone, so two
codes sharing z differ only through their mapped factors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InputError
from ..factorworld.render import render
from ..factorworld.spec import DatasetSpec
from .codes import CODE_SWEEP_RANGE, LatentCode


def affine_for_range(low: float, high: float) -> tuple[float, float]:
    """(a, b) with a*c + b sending [-2, 2] onto [low, high]."""
    span = CODE_SWEEP_RANGE[1] - CODE_SWEEP_RANGE[0]
    a = (high - low) / span
    b = low - a * CODE_SWEEP_RANGE[0]
    return a, b


@dataclass(frozen=True)
class OracleGenerator:
    spec: DatasetSpec
    mapping: dict[int, tuple[str, tuple[float, float]]]  # code index -> (factor name, (a, b))
    d_z: int = 8
    d_c: int = 10

    def __post_init__(self):
        factor_ids = [fid for fid, _ in self.mapping.values()]
        if len(set(factor_ids)) != len(factor_ids):
            raise InputError(f"mapping must be injective on factors, got {factor_ids}")
        for idx, (fid, (a, b)) in self.mapping.items():
            if not 0 <= idx < self.d_c:
                raise InputError(f"mapped code index {idx} outside [0, {self.d_c})")
            fspec = self.spec.factor(fid)
            lo = a * CODE_SWEEP_RANGE[0] + b
            hi = a * CODE_SWEEP_RANGE[1] + b
            if not (
                np.isclose(min(lo, hi), fspec.low, atol=1e-9)
                and np.isclose(max(lo, hi), fspec.high, atol=1e-9)
            ):
                raise InputError(
                    f"affine map for code {idx} sends [-2,2] onto [{lo}, {hi}], "
                    f"but factor {fid!r} has range {fspec.range}"
                )

    @property
    def n_classes(self) -> int:
        return self.spec.n_classes

    @property
    def image_size(self) -> int:
        return self.spec.image_size

    def _factors(self, code: LatentCode) -> np.ndarray:
        values = np.array([f.midpoint for f in self.spec.factors])
        for idx, (fid, (a, b)) in self.mapping.items():
            fspec = self.spec.factor(fid)
            values[self.spec.factor_index(fid)] = np.clip(a * code.c[idx] + b, fspec.low, fspec.high)
        return values

    def factors_for(self, codes: Sequence[LatentCode]) -> list[np.ndarray]:
        return [self._factors(code) for code in codes]

    def generate(self, codes: Sequence[LatentCode]) -> np.ndarray:
        images = []
        for code in codes:
            seed = int.from_bytes(
                hashlib.blake2b(np.ascontiguousarray(code.z).tobytes(), digest_size=8).digest(),
                "little",
            )
            images.append(render(self._factors(code), code.y, self.spec, seed).image)
        return np.stack(images)


def oracle_generator(
    spec: DatasetSpec,
    mapping: dict[int, str | tuple[str, tuple[float, float]]],
    d_z: int = 8,
    d_c: int = 10,
) -> OracleGenerator:
    """Build an oracle handle. Map entries may name just the factor, in which
    case the affine map onto its full range is derived automatically."""
    resolved = {}
    for idx, entry in mapping.items():
        if isinstance(entry, str):
            fspec = spec.factor(entry)
            resolved[int(idx)] = (entry, affine_for_range(fspec.low, fspec.high))
        else:
            fid, (a, b) = entry
            resolved[int(idx)] = (fid, (float(a), float(b)))
    return OracleGenerator(spec=spec, mapping=resolved, d_z=d_z, d_c=d_c)
