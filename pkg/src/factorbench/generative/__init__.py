from .codes import CODE_SWEEP_RANGE, LatentCode, allocate_labels, sample_codes
from .handles import (
    GeneratorHandle,
    counterfactual,
    counterfactual_batch,
    sample_synthetic,
    save_montage,
    traversal_grid,
)
from .infogan import (
    InfoGanConfig,
    InfoGanGenerator,
    QPredictor,
    code_recovery_correlations,
    load_generator,
    train_infogan,
)
from .losses import code_prior_nll, gan_step_losses, info_loss
from .oracle import OracleGenerator, affine_for_range, oracle_generator

__all__ = [
    "CODE_SWEEP_RANGE",
    "GeneratorHandle",
    "InfoGanConfig",
    "InfoGanGenerator",
    "LatentCode",
    "OracleGenerator",
    "QPredictor",
    "affine_for_range",
    "allocate_labels",
    "code_prior_nll",
    "code_recovery_correlations",
    "counterfactual",
    "counterfactual_batch",
    "gan_step_losses",
    "info_loss",
    "load_generator",
    "oracle_generator",
    "sample_codes",
    "sample_synthetic",
    "save_montage",
    "traversal_grid",
    "train_infogan",
]
