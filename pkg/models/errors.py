"""Error hierarchy for the SEDEG continual-learning system."""


class SedegError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"


class ConfigurationError(SedegError, ValueError):
    """Invalid configuration or tensor shape / dimension mismatch."""

    category = "configuration"


class TaskOrderError(SedegError, IndexError):
    """Task processed out of order, or an unknown task index was requested."""

    category = "task-order"


class DataError(SedegError, ValueError):
    """Dataset ingestion failure, empty training union, or label out of range."""

    category = "data"


class TrainingError(SedegError, RuntimeError):
    """A training step produced an unusable state (e.g. non-finite loss)."""

    category = "training"


class FreezeViolationError(TrainingError):
    """A parameter flagged frozen changed during a stage."""

    category = "freeze-audit"

    def __init__(self, stage: str, names):
        self.stage = stage
        self.names = list(names)
        super().__init__(
            f"{len(self.names)} frozen parameter(s) changed during {stage}: "
            + ", ".join(self.names[:5])
        )


EXIT_CODES = {
    "configuration": 2,
    "task-order": 2,
    "data": 3,
    "training": 4,
    "freeze-audit": 4,
}


def exit_code_for(error: BaseException) -> int:
    """Map an error to a process exit code (1 for uncategorized errors)."""
    return EXIT_CODES.get(getattr(error, "category", ""), 1)
