"""Experiment configuration: one JSON document drives a whole run."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import InputError
from ..generative.infogan import InfoGanConfig
from ..task.classifier import ClassifierConfig


@dataclass(frozen=True)
class DataConfig:
    n_train: int = 3000
    n_val: int = 800
    n_test: int = 1000
    sensitive_factor: str | None = "brightness"
    sensitivity: float = 0.8
    noise_sigma: float = 0.05
    n_classes: int = 5
    image_size: int = 32

    def __post_init__(self):
        if min(self.n_train, self.n_val, self.n_test) <= 0:
            raise InputError("split sizes must be positive")


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str = "oracle"  # "oracle" | "infogan"
    oracle_mapping: dict = field(default_factory=dict)  # code index -> factor name
    d_z: int = 32
    d_c: int = 10
    infogan_steps: int = 3000
    infogan_batch_size: int = 64
    infogan_lr_g: float = 1e-3
    infogan_lr_d: float = 2e-4
    infogan_info_weight: float = 1.0
    infogan_base_channels: int = 32

    def __post_init__(self):
        if self.kind not in ("oracle", "infogan"):
            raise InputError(f"generator kind must be 'oracle' or 'infogan', got {self.kind!r}")

    def infogan_config(self, seed: int) -> InfoGanConfig:
        return InfoGanConfig(
            d_z=self.d_z,
            d_c=self.d_c,
            steps=self.infogan_steps,
            batch_size=self.infogan_batch_size,
            lr_g=self.infogan_lr_g,
            lr_d=self.infogan_lr_d,
            info_weight=self.infogan_info_weight,
            base_channels=self.infogan_base_channels,
            seed=seed,
        )


@dataclass(frozen=True)
class GridConfig:
    top_codes: int = 2
    kinds: tuple[str, ...] = ("DA", "AA", "SC")
    da_multiplier: float = 10.0
    aa_weight: float = 1.0
    aa_bins: int = 10
    sc_weight: float = 1.0
    sc_code_batch: int = 32
    symmetric_kl: bool = False

    def __post_init__(self):
        if self.top_codes < 1 or not self.kinds:
            raise InputError("grid needs at least one code and one intervention kind")


@dataclass(frozen=True)
class EvaluationConfig:
    n_bins: int = 10
    min_count: int = 20
    synth_multiplier: int = 10
    traversal_steps: int = 8
    traversal_rows: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/experiment"
    data: DataConfig = field(default_factory=DataConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    real_factor: str = "brightness"
    factor_source: str = "manifest"

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        # output_dir does not change what is computed, only where it lands
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        kwargs = {}
        if "data" in d:
            kwargs["data"] = DataConfig(**d.pop("data"))
        if "generator" in d:
            g = dict(d.pop("generator"))
            if "oracle_mapping" in g:
                g["oracle_mapping"] = {int(k): v for k, v in g["oracle_mapping"].items()}
            kwargs["generator"] = GeneratorConfig(**g)
        if "classifier" in d:
            c = dict(d.pop("classifier"))
            if "widths" in c:
                c["widths"] = tuple(c["widths"])
            kwargs["classifier"] = ClassifierConfig(**c)
        if "grid" in d:
            g = dict(d.pop("grid"))
            if "kinds" in g:
                g["kinds"] = tuple(g["kinds"])
            kwargs["grid"] = GridConfig(**g)
        if "evaluation" in d:
            kwargs["evaluation"] = EvaluationConfig(**d.pop("evaluation"))
        return cls(**{**d, **kwargs})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, default=str)


def apply_overrides(config_dict: dict, overrides: list[str]) -> dict:
    """Apply dotted key=value overrides (values parsed as JSON, else strings)."""
    out = json.loads(json.dumps(config_dict))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise InputError(f"override {item!r} must look like dotted.key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise InputError(f"override {key!r} walks through non-object {part!r}")
        node[parts[-1]] = value
    return out
