"""Exception types shared across the workbench."""


class FactorBenchError(Exception):
    """Base class for all workbench errors."""


class InputError(FactorBenchError, ValueError):
    """Invalid argument or configuration supplied by the caller."""


class EvaluationError(FactorBenchError, RuntimeError):
    """A metric could not be computed (e.g. not enough populated bins)."""


class TrainingDivergenceError(FactorBenchError, RuntimeError):
    """A training run produced non-finite losses or model outputs."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
