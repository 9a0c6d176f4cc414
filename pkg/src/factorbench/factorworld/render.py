"""Deterministic glyph renderer.

Composition, in order: a flat background, one class glyph alpha-blended on top
(supersampled masks for smooth edges), per-pixel Gaussian noise, then a global
brightness multiplier and a clamp to [0, 1]. Noise precedes the brightness
multiplier so exposure changes alone do not alter the signal-to-noise ratio.
A factor with sensitivity_strength s scales the glyph-background contrast by
(1 - s*t), t being that factor's normalized range position, so class evidence
degrades controllably along that factor.
"""

from __future__ import annotations

import colorsys

import numpy as np

from ..errors import InputError
from ..seeding import derive_seed
from .spec import DatasetSpec, Sample

SUPERSAMPLE = 4

# Internal ranges each render effect maps its factor's normalized position onto.
_RADIUS_FRAC = (0.22, 0.45)        # glyph radius as a fraction of image size
_BRIGHTNESS_MUL = (0.35, 1.0)      # global luminance multiplier
_BACKGROUND = (0.15, 0.50)         # background gray level
_POSITION_SPAN = 0.30              # max horizontal center offset, fraction of width


def _effect_positions(factors: np.ndarray, spec: DatasetSpec) -> dict[str, float]:
    """Normalized position per render effect; 0.5 (canonical) when absent."""
    pos = {effect: 0.5 for effect in ("scale", "brightness", "hue", "position_x", "background_level")}
    for value, fspec in zip(factors, spec.factors):
        pos[fspec.render_effect] = float(fspec.normalized(value))
    return pos


def contrast_attenuation(factors: np.ndarray, spec: DatasetSpec) -> float:
    """Product of (1 - s*t) over all factors, floored at 0."""
    k = 1.0
    for value, fspec in zip(factors, spec.factors):
        s = fspec.sensitivity_strength
        if s > 0:
            k *= max(0.0, 1.0 - s * float(fspec.normalized(value)))
    return k


def _glyph_mask(label: int, cx: float, cy: float, radius: float, size: int) -> np.ndarray:
    """Fractional-coverage mask (size x size) of the class glyph, supersampled."""
    n = size * SUPERSAMPLE
    coords = (np.arange(n) + 0.5) / SUPERSAMPLE
    x = coords[None, :] - cx
    y = coords[:, None] - cy
    r = radius
    if label == 0:  # disk
        inside = x * x + y * y <= r * r
    elif label == 1:  # square
        s = 0.82 * r
        inside = (np.abs(x) <= s) & (np.abs(y) <= s)
    elif label == 2:  # triangle, apex up
        top, bot, half = -r, 0.8 * r, 0.95 * r
        slope = half / (bot - top)
        inside = (y >= top) & (y <= bot) & (np.abs(x) <= slope * (y - top))
    elif label == 3:  # plus
        arm = 0.36 * r
        inside = ((np.abs(x) <= arm) & (np.abs(y) <= r)) | ((np.abs(y) <= arm) & (np.abs(x) <= r))
    elif label == 4:  # diamond
        inside = np.abs(x) + np.abs(y) <= 1.2 * r
    else:
        raise InputError(f"label {label} has no glyph (max supported class is 4)")
    frac = inside.astype(np.float64).reshape(size, SUPERSAMPLE, size, SUPERSAMPLE)
    return frac.mean(axis=(1, 3))


def render(factors: np.ndarray, label: int, spec: DatasetSpec, seed: int) -> Sample:
    """Render one sample; bit-identical for identical (factors, label, spec, seed)."""
    factors = np.asarray(factors, dtype=np.float64)
    if factors.shape != (spec.n_factors,):
        raise InputError(f"expected {spec.n_factors} factor values, got shape {factors.shape}")
    for value, fspec in zip(factors, spec.factors):
        if not fspec.contains(float(value)):
            raise InputError(f"factor {fspec.name!r}={value} outside range {fspec.range}")
    if not 0 <= label < spec.n_classes:
        raise InputError(f"label {label} outside [0, {spec.n_classes})")

    size = spec.image_size
    pos = _effect_positions(factors, spec)

    radius = (_RADIUS_FRAC[0] + pos["scale"] * (_RADIUS_FRAC[1] - _RADIUS_FRAC[0])) * size
    bright = _BRIGHTNESS_MUL[0] + pos["brightness"] * (_BRIGHTNESS_MUL[1] - _BRIGHTNESS_MUL[0])
    bg = _BACKGROUND[0] + pos["background_level"] * (_BACKGROUND[1] - _BACKGROUND[0])
    cx = size / 2 + (pos["position_x"] - 0.5) * _POSITION_SPAN * size
    cy = size / 2
    color = np.array(colorsys.hsv_to_rgb(pos["hue"], 0.85, 0.95), dtype=np.float64)

    mask = _glyph_mask(int(label), cx, cy, radius, size)
    k = contrast_attenuation(factors, spec)

    img = np.full((size, size, 3), bg, dtype=np.float64)
    img += mask[:, :, None] * (color - bg)[None, None, :] * k
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(derive_seed(seed, "render-noise"))
        img += rng.normal(0.0, spec.noise_sigma, img.shape)
    img *= bright
    img = np.clip(img, 0.0, 1.0)

    return Sample(image=img.astype(np.float32), label=int(label), factors=factors.copy())
