"""Single entry point that runs one intervention end to end.

Every intervention retrains from scratch rather than fine-tuning, so the rows
being compared are all full models under the same budget.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import InputError
from ..generative.handles import GeneratorHandle
from ..seeding import derive_seed
from ..task.classifier import ClassifierConfig, ClassifierHandle, train_classifier
from .adversarial import AaConfig, train_aa
from .augment import augment_da
from .consistency import ScConfig, train_sc

KINDS = ("DA", "AA", "SC")


@dataclass(frozen=True)
class InterventionConfig:
    kind: str
    factor_index: int
    da_multiplier: float = 10.0
    aa_weight: float = 1.0
    aa_bins: int = 10
    sc_weight: float = 1.0
    sc_code_batch: int = 32
    symmetric_kl: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown intervention kind {self.kind!r}, expected one of {KINDS}")
        if self.factor_index < 0:
            raise InputError("factor_index must be >= 0")
        for name in ("da_multiplier", "aa_weight", "sc_weight"):
            if not np.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")

    @property
    def label(self) -> str:
        return f"{self.kind}-{self.factor_index}"

    def hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class InterventionContext:
    train_set: list
    generator: GeneratorHandle
    classifier_config: ClassifierConfig
    test_size: int
    label_dist: np.ndarray = field(default=None)
    n_classes: int = 5

    def __post_init__(self):
        if self.label_dist is None:
            labels = np.array([s.label for s in self.train_set])
            self.label_dist = np.bincount(labels, minlength=self.n_classes) / len(labels)


def apply_intervention(config: InterventionConfig, context: InterventionContext) -> ClassifierHandle:
    """Train the intervened classifier named by config; metadata records the
    intervention's config hash (and the augmented set size for DA)."""
    i = config.factor_index
    if i >= context.generator.d_c:
        raise InputError(f"factor_index {i} outside generator's d_c={context.generator.d_c}")

    if config.kind == "DA":
        augmented = augment_da(
            context.train_set,
            context.generator,
            i,
            context.test_size,
            config.da_multiplier,
            context.label_dist,
            seed=derive_seed(config.seed, "da-synth", i),
        )
        handle = train_classifier(
            augmented,
            context.classifier_config,
            n_classes=context.n_classes,
            metadata={"intervention": "DA", "code_index": i, "augmented_size": len(augmented)},
        )
    elif config.kind == "AA":
        handle = train_aa(
            context.train_set,
            context.generator,
            i,
            AaConfig(
                classifier=context.classifier_config,
                weight=config.aa_weight,
                bins=config.aa_bins,
                seed=config.seed,
            ),
        )
    else:  # SC
        handle = train_sc(
            context.train_set,
            context.generator,
            i,
            ScConfig(
                classifier=context.classifier_config,
                weight=config.sc_weight,
                code_batch=config.sc_code_batch,
                symmetric=config.symmetric_kl,
                seed=config.seed,
            ),
        )
    handle.metadata["intervention_config"] = asdict(config)
    handle.metadata["intervention_hash"] = config.hash()
    return handle
