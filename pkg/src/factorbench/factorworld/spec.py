"""Factor and dataset descriptors for the procedural image domain.

The domain renders one class-identifying glyph per image (5 shapes) on a flat
background, with every appearance attribute driven by a named ground-truth
factor. Factors are real-valued; the renderer only ever sees the factor's
normalized position inside its declared range, so ranges can use any units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError

RENDER_EFFECTS = ("scale", "brightness", "hue", "position_x", "background_level")

GLYPH_NAMES = ("disk", "square", "triangle", "plus", "diamond")


@dataclass(frozen=True)
class FactorSpec:
    """One ground-truth factor of variation and the render rule it drives."""

    name: str
    range: tuple[float, float]
    render_effect: str
    sensitivity_strength: float = 0.0

    def __post_init__(self):
        lo, hi = self.range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise InputError(f"factor {self.name!r}: range must be finite with lo < hi, got {self.range}")
        if self.render_effect not in RENDER_EFFECTS:
            raise InputError(
                f"factor {self.name!r}: unknown render_effect {self.render_effect!r}, "
                f"expected one of {RENDER_EFFECTS}"
            )
        if not (np.isfinite(self.sensitivity_strength) and self.sensitivity_strength >= 0):
            raise InputError(f"factor {self.name!r}: sensitivity_strength must be >= 0")

    @property
    def low(self) -> float:
        return self.range[0]

    @property
    def high(self) -> float:
        return self.range[1]

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)

    def normalized(self, value: float | np.ndarray) -> float | np.ndarray:
        """Position of ``value`` inside the range, 0 at low, 1 at high."""
        return (value - self.low) / (self.high - self.low)

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class DatasetSpec:
    """Immutable description of a procedural dataset (factors, classes, geometry)."""

    factors: tuple[FactorSpec, ...]
    n_classes: int = 5
    image_size: int = 32
    noise_sigma: float = 0.05

    def __post_init__(self):
        if not self.factors:
            raise InputError("DatasetSpec needs at least one factor")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate factor names: {names}")
        if not (2 <= self.n_classes <= len(GLYPH_NAMES)):
            raise InputError(f"n_classes must be in [2, {len(GLYPH_NAMES)}], got {self.n_classes}")
        if self.image_size < 8:
            raise InputError("image_size must be >= 8")
        if self.noise_sigma < 0:
            raise InputError("noise_sigma must be >= 0")

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    def factor_index(self, name: str) -> int:
        for i, f in enumerate(self.factors):
            if f.name == name:
                return i
        raise InputError(f"no factor named {name!r} (have {[f.name for f in self.factors]})")

    def factor(self, name: str) -> FactorSpec:
        return self.factors[self.factor_index(name)]


@dataclass
class Sample:
    """One image with its task label and (when known) ground-truth factor vector.

    ``factors`` is None for synthetic samples drawn from a learned generator,
    where the true factor values are unobservable.
    """

    image: np.ndarray
    label: int
    factors: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float32)
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise InputError(f"image must be HxWx3, got shape {self.image.shape}")
        if self.factors is not None:
            self.factors = np.asarray(self.factors, dtype=np.float64)


def default_spec(
    sensitive_factor: str | None = None,
    sensitivity: float = 0.0,
    noise_sigma: float = 0.10,
    n_classes: int = 5,
    image_size: int = 32,
) -> DatasetSpec:
    """The standard 5-factor world, optionally with one factor degrading class evidence."""
    base = [
        ("size", (0.5, 1.4), "scale"),
        ("brightness", (0.0, 1.0), "brightness"),
        ("hue", (0.0, 1.0), "hue"),
        ("position_x", (-1.0, 1.0), "position_x"),
        ("background", (0.0, 1.0), "background_level"),
    ]
    factors = []
    for name, rng, effect in base:
        strength = sensitivity if name == sensitive_factor else 0.0
        factors.append(FactorSpec(name, rng, effect, strength))
    if sensitive_factor is not None and sensitive_factor not in [f.name for f in factors]:
        raise InputError(f"unknown sensitive_factor {sensitive_factor!r}")
    return DatasetSpec(
        factors=tuple(factors),
        n_classes=n_classes,
        image_size=image_size,
        noise_sigma=noise_sigma,
    )
