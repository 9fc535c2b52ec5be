"""Exception types shared across the pipeline."""


class ConfigurationError(ValueError):
    """Invalid configuration value (bad sampling setup, non-power-of-two FFT size, ...)."""


class DomainError(ValueError):
    """Input outside an operation's domain (empty frame, empty sequence, bad label)."""


class InconsistencyError(ArithmeticError):
    """Numerically impossible intermediate result, signals an upstream fault."""


class ShapeError(ValueError):
    """Tensor/array shape mismatch."""


class WindowError(RuntimeError):
    """Not enough samples around an event to cut the requested windows."""


class FeatureError(ValueError):
    """Non-finite or malformed feature values."""


class TrainingError(RuntimeError):
    """Training diverged or was otherwise unable to proceed."""


class StratificationError(ValueError):
    """A class has too few examples for a stratified split."""


class PipelineError(RuntimeError):
    """Failure inside run_pipeline, tagged with the stage that raised it."""

    def __init__(self, stage, original):
        super().__init__(f"pipeline stage '{stage}': {original}")
        self.stage = stage
        self.original = original
