"""Utility and invariance metrics over binned subpopulations.

All values are percentages to keep reported tables directly comparable:
overall accuracy, per-bin accuracy, the max-min accuracy gap across bins,
minimum bin accuracy, and the compound accuracy improvement (CAI) that
trades off gap reduction against accuracy change relative to a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, InputError
from .factorworld.binning import BinPartition


@dataclass
class MetricBundle:
    """Per-evaluation metric record. Sparse bins (below min_count) are excluded
    from gap/min but still listed with their counts."""

    acc: float
    acc_gap: float
    acc_min: float
    per_bin_acc: np.ndarray
    bin_counts: np.ndarray
    included: np.ndarray = field(default=None)

    def __post_init__(self):
        self.per_bin_acc = np.asarray(self.per_bin_acc, dtype=np.float64)
        self.bin_counts = np.asarray(self.bin_counts, dtype=np.int64)
        if self.included is None:
            self.included = np.ones(len(self.per_bin_acc), dtype=bool)
        self.included = np.asarray(self.included, dtype=bool)

    def to_dict(self) -> dict:
        return {
            "acc": self.acc,
            "acc_gap": self.acc_gap,
            "acc_min": self.acc_min,
            "per_bin_acc": [None if not np.isfinite(a) else float(a) for a in self.per_bin_acc],
            "bin_counts": self.bin_counts.tolist(),
            "included": self.included.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricBundle":
        per_bin = np.array([np.nan if a is None else a for a in d["per_bin_acc"]], dtype=np.float64)
        return cls(
            acc=d["acc"],
            acc_gap=d["acc_gap"],
            acc_min=d["acc_min"],
            per_bin_acc=per_bin,
            bin_counts=np.asarray(d["bin_counts"], dtype=np.int64),
            included=np.asarray(d["included"], dtype=bool),
        )

    def csv_header(self) -> list[str]:
        n = len(self.per_bin_acc)
        return (
            ["acc", "acc_gap", "acc_min"]
            + [f"bin{i}_acc" for i in range(n)]
            + [f"bin{i}_count" for i in range(n)]
        )

    def csv_row(self) -> list:
        return (
            [self.acc, self.acc_gap, self.acc_min]
            + ["" if not np.isfinite(a) else a for a in self.per_bin_acc]
            + self.bin_counts.tolist()
        )


@dataclass(frozen=True)
class CaiInputs:
    baseline: tuple[float, float]    # (acc, acc_gap), percent
    intervened: tuple[float, float]  # (acc, acc_gap), percent
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InputError(f"lambda must be in [0, 1], got {self.lam}")


def _predicted_labels(predictions: np.ndarray) -> np.ndarray:
    predictions = np.asarray(predictions)
    if predictions.ndim == 2:
        return predictions.argmax(axis=1)
    return predictions.astype(np.int64)


def per_bin_accuracy(
    predictions: np.ndarray,
    labels: np.ndarray,
    partition: BinPartition,
    min_count: int = 20,
) -> MetricBundle:
    """Accuracy per bin (percent). Bins with fewer than min_count samples are
    flagged excluded; gap and min are computed over included bins only."""
    pred = _predicted_labels(predictions)
    labels = np.asarray(labels, dtype=np.int64)
    if len(pred) != len(labels) or len(pred) != len(partition.assignment):
        raise InputError(
            f"length mismatch: {len(pred)} predictions, {len(labels)} labels, "
            f"{len(partition.assignment)} bin assignments"
        )
    correct = (pred == labels).astype(np.float64)
    n_bins = partition.n_bins
    counts = partition.counts()
    per_bin = np.full(n_bins, np.nan)
    for b in range(n_bins):
        if counts[b] > 0:
            per_bin[b] = 100.0 * correct[partition.assignment == b].mean()
    included = counts >= max(min_count, 1)
    if not included.any():
        raise EvaluationError(f"all {n_bins} bins fall below min_count={min_count}")

    acc = 100.0 * correct.mean()
    inc_acc = per_bin[included]
    gap = float(inc_acc.max() - inc_acc.min()) if included.sum() >= 2 else float("nan")
    return MetricBundle(
        acc=float(acc),
        acc_gap=gap,
        acc_min=float(inc_acc.min()),
        per_bin_acc=per_bin,
        bin_counts=counts,
        included=included,
    )


def acc_gap(per_bin: np.ndarray, included: np.ndarray | None = None) -> float:
    """Max minus min accuracy over included bins (percent)."""
    per_bin = np.asarray(per_bin, dtype=np.float64)
    if included is None:
        included = np.isfinite(per_bin)
    vals = per_bin[np.asarray(included, dtype=bool)]
    if len(vals) < 2:
        raise EvaluationError(f"need >= 2 included bins for acc_gap, got {len(vals)}")
    return float(vals.max() - vals.min())


def cai(inputs: CaiInputs) -> float:
    """lam * (baseline gap - intervened gap) + (1 - lam) * (intervened acc - baseline acc)."""
    (acc_b, gap_b), (acc_i, gap_i) = inputs.baseline, inputs.intervened
    return inputs.lam * (gap_b - gap_i) + (1.0 - inputs.lam) * (acc_i - acc_b)


def bundle_from_predictions(
    predictions: np.ndarray,
    labels: np.ndarray,
    partition: BinPartition,
    min_count: int = 20,
) -> MetricBundle:
    bundle = per_bin_accuracy(predictions, labels, partition, min_count)
    if bundle.included.sum() < 2:
        raise EvaluationError("need >= 2 included bins to compute the accuracy gap")
    return bundle


def evaluate(classifier, samples, partition: BinPartition, min_count: int = 20) -> MetricBundle:
    """Full metric bundle for a classifier over a partitioned sample list."""
    from .factorworld.dataset import stack_images, stack_labels

    if len(samples) != len(partition.assignment):
        raise InputError(f"{len(samples)} samples but {len(partition.assignment)} bin assignments")
    probs = classifier.predict(stack_images(samples))
    return bundle_from_predictions(probs, stack_labels(samples), partition, min_count)
