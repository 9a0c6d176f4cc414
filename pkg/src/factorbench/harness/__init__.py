from .config import (
    DataConfig,
    EvaluationConfig,
    ExperimentConfig,
    GeneratorConfig,
    GridConfig,
    apply_overrides,
)
from .report import EvalReport, ReportRow
from .runner import STAGES, ExperimentRunner, StageFailure, run_experiment
from .scan import sensitivity_scan
from .settings import (
    acai_select,
    generalization_setting,
    real_factor_partition,
    real_factor_values,
    unsupervised_setting,
)

__all__ = [
    "DataConfig",
    "EvalReport",
    "EvaluationConfig",
    "ExperimentConfig",
    "ExperimentRunner",
    "GeneratorConfig",
    "GridConfig",
    "ReportRow",
    "STAGES",
    "StageFailure",
    "acai_select",
    "apply_overrides",
    "generalization_setting",
    "real_factor_partition",
    "real_factor_values",
    "run_experiment",
    "sensitivity_scan",
    "unsupervised_setting",
]
