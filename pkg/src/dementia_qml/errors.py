"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration (qubit counts, optimizer settings, experiment files)."""


class TrainingError(RuntimeError):
    """Training stopped before a usable result was reached.

    ``best`` carries whatever partial result was available (a model or an
    optimization result), so callers can still inspect it.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class DataLoadError(ValueError):
    """CSV ingestion failed (missing file, missing label column, no usable rows)."""
