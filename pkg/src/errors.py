# Error types for SPARSEADD
# Exception hierarchy shared by the library and the CLI exit-code mapping

import logging
from typing import Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_STAGE_FAILURE = 3


class SparsifyError(ValueError):
    """Base class for all errors raised by the library."""


class InvalidInputError(SparsifyError):
    """A precondition of an operation is violated."""


class BudgetExceededError(InvalidInputError):
    """A requested computation exceeds a configured size cap."""


class StageError(SparsifyError):
    """
    A pipeline stage failed.

    Carries the stage label so the CLI can report which step broke.
    """

    def __init__(self, stage: str, message: str, cause: Optional[BaseException] = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.cause = cause


class ConvergenceError(StageError):
    """An optimizer diverged or produced a non-finite iterate."""

    def __init__(self, message: str, stage: str = "optimize"):
        super().__init__(stage, message)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the CLI exit code convention."""
    if isinstance(exc, StageError):
        return EXIT_STAGE_FAILURE
    if isinstance(exc, (InvalidInputError, FileNotFoundError)):
        return EXIT_INVALID_INPUT
    if isinstance(exc, ValueError):
        return EXIT_INVALID_INPUT
    logger.error("Unexpected failure: %s", exc)
    return EXIT_STAGE_FAILURE
