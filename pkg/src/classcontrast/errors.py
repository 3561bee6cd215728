"""Exception and warning types shared across the package."""


class ClassContrastError(Exception):
    """Base class for package errors."""


class ConfigError(ClassContrastError, ValueError):
    """Invalid recipe, pipeline configuration or CLI arguments."""


class DataError(ClassContrastError, ValueError):
    """Malformed or inconsistent input data."""


class TrainingError(ClassContrastError, RuntimeError):
    """Training diverged (non-finite loss or parameters)."""


class PipelineError(ClassContrastError):
    """A pipeline stage failed; carries the stage name and seed."""

    def __init__(self, stage, seed, cause):
        self.stage = stage
        self.seed = seed
        self.cause = cause
        super().__init__(f"stage {stage!r} failed for seed {seed}: {cause}")


class ClassContrastWarning(UserWarning):
    """Recoverable data condition (tiny class, zero-mass row, rank deficit...)."""
