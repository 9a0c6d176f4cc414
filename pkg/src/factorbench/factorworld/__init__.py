from .binning import BinPartition, bin_assign
from .color import compute_brightness, lstar
from .dataset import (
    factor_column,
    generate_dataset,
    label_distribution,
    load_dataset,
    save_dataset,
    stack_images,
    stack_labels,
)
from .render import contrast_attenuation, render
from .spec import DatasetSpec, FactorSpec, Sample, default_spec

__all__ = [
    "BinPartition",
    "DatasetSpec",
    "FactorSpec",
    "Sample",
    "bin_assign",
    "compute_brightness",
    "contrast_attenuation",
    "default_spec",
    "factor_column",
    "generate_dataset",
    "label_distribution",
    "load_dataset",
    "lstar",
    "render",
    "save_dataset",
    "stack_images",
    "stack_labels",
]
