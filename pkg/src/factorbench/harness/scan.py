"""Sensitivity scan: rank every latent code by the accuracy gap it induces.

One synthetic evaluation set is drawn (codes uniform on [-2, 2], labels
matching the test set's distribution, ten times the test-set size) and the
baseline classifier's predictions are computed once; each code is then scored
by re-binning those predictions along that code's sampled values.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..factorworld.binning import bin_assign
from ..factorworld.dataset import stack_images, stack_labels
from ..generative.codes import CODE_SWEEP_RANGE
from ..generative.handles import GeneratorHandle, sample_synthetic
from ..metrics import MetricBundle, bundle_from_predictions

SYNTH_MULTIPLIER = 10


def sensitivity_scan(
    baseline_clf,
    gen: GeneratorHandle,
    test_label_dist: np.ndarray,
    test_size: int,
    seed: int,
    n_bins: int = 10,
    min_count: int = 20,
    synth_multiplier: int = SYNTH_MULTIPLIER,
) -> list[tuple[int, MetricBundle]]:
    """Ranked (code index, metric bundle) pairs, largest accuracy gap first."""
    if test_size <= 0:
        raise InputError("test_size must be > 0")
    n = synth_multiplier * test_size
    synth = sample_synthetic(gen, n, test_label_dist, c_dist="uniform-eval", seed=seed)
    samples = [s for s, _ in synth]
    codes = np.stack([code.c for _, code in synth])

    pred_labels = baseline_clf.predict(stack_images(samples)).argmax(axis=1)
    labels = stack_labels(samples)

    scored = []
    for i in range(gen.d_c):
        partition = bin_assign(codes[:, i], n_bins, CODE_SWEEP_RANGE, factor_id=f"c{i}")
        bundle = bundle_from_predictions(pred_labels, labels, partition, min_count)
        scored.append((i, bundle))
    scored.sort(key=lambda pair: (-pair[1].acc_gap, pair[0]))
    return scored
