"""The three evaluation settings.

1. Code invariance: models evaluated on a synthetic set binned by one latent
   code's own sampled values (no factor labels needed).
2. Factor generalization: the same models evaluated on the real test set
   binned by a ground-truth factor.
3. Validated selection: grid search over (code, intervention kind) pairs on a
   factor-labeled validation set, picking the best validation CAI_0.5.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import InputError
from ..factorworld.binning import BinPartition, bin_assign
from ..factorworld.color import compute_brightness
from ..factorworld.dataset import factor_column, stack_images, stack_labels
from ..factorworld.spec import DatasetSpec
from ..generative.codes import CODE_SWEEP_RANGE
from ..generative.handles import GeneratorHandle, sample_synthetic
from ..metrics import CaiInputs, bundle_from_predictions, cai
from .report import ReportRow

FACTOR_SOURCES = ("manifest", "computed_brightness")


def real_factor_values(samples, spec: DatasetSpec, factor_name: str, source: str = "manifest") -> np.ndarray:
    """Ground-truth factor values per sample, from the manifest or re-extracted
    from pixels (mean CIELab L*)."""
    if source == "manifest":
        return factor_column(samples, spec.factor_index(factor_name))
    if source == "computed_brightness":
        return np.array([compute_brightness(s.image) for s in samples])
    raise InputError(f"unknown factor source {source!r}, expected one of {FACTOR_SOURCES}")


def real_factor_partition(
    samples,
    spec: DatasetSpec,
    factor_name: str,
    source: str = "manifest",
    n_bins: int = 10,
    edges_range: tuple[float, float] | None = None,
) -> BinPartition:
    """Equal-width bins over the factor's declared range (manifest factors) or
    an explicitly supplied range (extracted factors, frozen from validation)."""
    values = real_factor_values(samples, spec, factor_name, source)
    if edges_range is None:
        if source == "manifest":
            fspec = spec.factor(factor_name)
            edges_range = (fspec.low, fspec.high)
        else:
            edges_range = (float(values.min()), float(values.max()))
    return bin_assign(values, n_bins, edges_range, factor_id=factor_name)


def _rows_for_partition(
    baseline,
    intervened: Mapping[str, object],
    samples,
    partition: BinPartition,
    min_count: int,
) -> list[ReportRow]:
    images = stack_images(samples)
    labels = stack_labels(samples)
    base_bundle = bundle_from_predictions(baseline.predict(images), labels, partition, min_count)
    rows = [ReportRow.from_bundle("Base", base_bundle, 0.0, 0.0)]
    base_pair = (base_bundle.acc, base_bundle.acc_gap)
    for name, clf in intervened.items():
        bundle = bundle_from_predictions(clf.predict(images), labels, partition, min_count)
        pair = (bundle.acc, bundle.acc_gap)
        rows.append(
            ReportRow.from_bundle(
                name,
                bundle,
                cai(CaiInputs(base_pair, pair, 0.5)),
                cai(CaiInputs(base_pair, pair, 0.75)),
            )
        )
    return rows


def unsupervised_setting(
    baseline,
    intervened_clfs: Mapping[str, object],
    gen: GeneratorHandle,
    i: int,
    test_label_dist: np.ndarray,
    test_size: int,
    seed: int,
    n_bins: int = 10,
    min_count: int = 20,
    synth_multiplier: int = 10,
) -> list[ReportRow]:
    """Baseline plus interventions evaluated on a synthetic set binned by c_i."""
    if not 0 <= i < gen.d_c:
        raise InputError(f"code index {i} outside [0, {gen.d_c})")
    synth = sample_synthetic(
        gen, synth_multiplier * test_size, test_label_dist, c_dist="uniform-eval", seed=seed
    )
    samples = [s for s, _ in synth]
    c_values = np.array([code.c[i] for _, code in synth])
    partition = bin_assign(c_values, n_bins, CODE_SWEEP_RANGE, factor_id=f"c{i}")
    return _rows_for_partition(baseline, intervened_clfs, samples, partition, min_count)


def generalization_setting(
    baseline,
    intervened_clfs: Mapping[str, object],
    test_samples,
    spec: DatasetSpec,
    factor_name: str,
    source: str = "manifest",
    n_bins: int = 10,
    min_count: int = 20,
    edges_range: tuple[float, float] | None = None,
) -> list[ReportRow]:
    """Same models, re-evaluated on the real test set binned by a true factor.
    The partition is computed once and shared by every classifier."""
    partition = real_factor_partition(test_samples, spec, factor_name, source, n_bins, edges_range)
    return _rows_for_partition(baseline, intervened_clfs, test_samples, partition, min_count)


def acai_select(
    candidates: Sequence[tuple[int, str]],
    validation_samples,
    spec: DatasetSpec,
    factor_name: str,
    baseline,
    classifier_for: Callable[[int, str], object],
    source: str = "manifest",
    n_bins: int = 10,
    min_count: int = 20,
    edges_range: tuple[float, float] | None = None,
) -> tuple[tuple[int, str], list[dict]]:
    """Grid search over (code, kind) candidates on validation real-factor bins.

    Selects the candidate maximizing validation CAI_0.5 against the baseline;
    ties break toward higher validation accuracy, then lower code index, then
    candidate order. Returns the selected pair and the full grid report.
    """
    if len(candidates) == 0:
        raise InputError("candidate grid must be non-empty")
    partition = real_factor_partition(validation_samples, spec, factor_name, source, n_bins, edges_range)
    images = stack_images(validation_samples)
    labels = stack_labels(validation_samples)
    base_bundle = bundle_from_predictions(baseline.predict(images), labels, partition, min_count)
    base_pair = (base_bundle.acc, base_bundle.acc_gap)

    grid = []
    for order, (code, kind) in enumerate(candidates):
        clf = classifier_for(code, kind)
        bundle = bundle_from_predictions(clf.predict(images), labels, partition, min_count)
        pair = (bundle.acc, bundle.acc_gap)
        grid.append(
            {
                "code": int(code),
                "kind": kind,
                "order": order,
                "val_acc": bundle.acc,
                "val_acc_gap": bundle.acc_gap,
                "val_acc_min": bundle.acc_min,
                "val_cai_05": cai(CaiInputs(base_pair, pair, 0.5)),
                "val_cai_75": cai(CaiInputs(base_pair, pair, 0.75)),
            }
        )
    best = max(grid, key=lambda g: (g["val_cai_05"], g["val_acc"], -g["code"], -g["order"]))
    return (best["code"], best["kind"]), grid
