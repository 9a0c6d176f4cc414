"""sRGB luminance in CIELab, used as the extractable image-brightness factor.

Standard sRGB -> XYZ -> L* pipeline, D65 white point, 2-degree observer.
Only L* is needed here. The linear low-light segment of the L* formula is
written without the 116*f - 16 cancellation so black maps to exactly 0.0,
and Y is normalized by the coefficient sum so white maps to exactly 100.0.
"""

from __future__ import annotations

import numpy as np

# Luminance row of the sRGB -> XYZ matrix (Rec.709 primaries, D65).
_Y_R, _Y_G, _Y_B = 0.212671, 0.715160, 0.072169
_Y_WHITE = _Y_R + _Y_G + _Y_B

_LAB_T0 = (6.0 / 29.0) ** 3
_LAB_LINEAR = 116.0 * 841.0 / 108.0  # slope of L* below the cube-root threshold


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def lstar(image: np.ndarray) -> np.ndarray:
    """Per-pixel CIELab L* of an HxWx3 sRGB image with values in [0, 1]."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected HxWx3 image, got shape {image.shape}")
    lin = srgb_to_linear(image)
    y = lin[..., 0] * _Y_R + lin[..., 1] * _Y_G + lin[..., 2] * _Y_B
    t = y / _Y_WHITE
    return np.where(t > _LAB_T0, 116.0 * np.cbrt(t) - 16.0, t * _LAB_LINEAR)


def compute_brightness(image: np.ndarray) -> float:
    """Mean CIELab L* over all pixels; 0 for black, 100 for white."""
    return float(lstar(image).mean())
