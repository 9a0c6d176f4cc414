"""Equal-width binning of factor values into subpopulations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass
class BinPartition:
    """Assignment of samples to equal-width bins over one factor's value range."""

    factor_id: str
    edges: np.ndarray
    assignment: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_bins)


def bin_assign(
    values: np.ndarray,
    n_bins: int,
    value_range: tuple[float, float],
    factor_id: str = "",
) -> BinPartition:
    """Assign each value to one of ``n_bins`` equal-width bins over ``value_range``.

    Values equal to the upper edge land in the last bin; values outside the
    range are clamped to the nearest bin (learned-code distributions have
    tails and evaluation must not crash on them).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) == 0:
        raise InputError("values must be a non-empty 1-D vector")
    if n_bins < 2:
        raise InputError(f"n_bins must be >= 2, got {n_bins}")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise InputError(f"range must be finite with lo < hi, got {value_range}")

    idx = np.floor((values - lo) / (hi - lo) * n_bins).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    edges = np.linspace(lo, hi, n_bins + 1)
    return BinPartition(factor_id=factor_id, edges=edges, assignment=idx)
