"""
Exceptions raised by dpnibble.

Every error carries the process exit code the command-line front end returns for it, the same
way an HTTP error carries a status code. The exit-code scheme is fixed so that experiment
harnesses can branch on it:

    0 ok, 1 semantic failure, 2 invariant violation, 3 pipeline exhaustion,
    64 usage, 65 data format, 70 internal error.
"""

from typing import Optional, Sequence


class ColoringError(Exception):
    """
    Base class for every error dpnibble raises on purpose.
    It associates an exit code with a message, so the command-line layer can turn any error
    into a process exit status without knowing where it came from.
    """

    # Subclasses override this with the exit code that fits their category.
    default_exit_code = 70

    # Dictionary mapping exit codes to default messages, used when no message is given.
    error_messages = {
        0: "0 - OK: the command completed and its output was verified.",
        1: "1 - SEMANTIC FAILURE: the input is well-formed but does not have the checked property "
           "(for example a coloring with a conflicting cover edge).",
        2: "2 - INVARIANT VIOLATION: a precondition, contract or checked invariant does not hold. "
           "The accompanying report names the clause and a witness.",
        3: "3 - PIPELINE EXHAUSTED: a randomized stage reached its retry cap. Rerun with another "
           "seed or a larger cap.",
        64: "64 - USAGE: the command line or the parameters are invalid.",
        65: "65 - DATA FORMAT: an input file could not be parsed.",
        70: "70 - INTERNAL ERROR: an internal verification failed. This is a bug.",
    }

    def __init__(self, message: Optional[str] = None, exit_code: Optional[int] = None):
        """
        :param message: Optional detail. Defaults to the message registered for the exit code.
        :param exit_code: Optional exit code overriding the class default.
        """
        self.exit_code = exit_code if exit_code is not None else self.default_exit_code
        self.message = message if message else self.get_error_message()
        super().__init__(self.message)

    def __str__(self):
        return f"{self.exit_code}: {self.message}"

    def get_error_message(self):
        """
        Retrieves the default message for this error's exit code.
        :return: The registered message, or a generic one for unknown codes.
        """
        return self.error_messages.get(self.exit_code, f"Unknown error code {self.exit_code}.")


class ParameterError(ColoringError):
    """Infeasible parameters for a generator, a round or the schedule."""
    default_exit_code = 64


class UsageError(ParameterError):
    """Bad command line."""


class MalformedInputError(ColoringError):
    """
    Raised when a graph, cover or coloring cannot be built from its input.
    Carries the 1-based line number when the input came from a file.
    """
    default_exit_code = 65

    def __init__(self, message: Optional[str] = None, line: Optional[int] = None):
        self.line = line
        if line is not None and message:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolation(ColoringError):
    """
    A caller broke the precondition of an operation.
    :param vertex: Vertex witnessing the violation, when there is one.
    :param clause: Short name of the violated clause.
    """
    default_exit_code = 2

    def __init__(self, message: Optional[str] = None, vertex: Optional[int] = None,
                 clause: Optional[str] = None):
        self.vertex = vertex
        self.clause = clause
        super().__init__(message)


class UndefinedAverageError(ContractViolation):
    """Average color-degree requested for an empty list."""


class ScheduleDivergenceError(ColoringError):
    """The parameter recursion did not reach its stopping index within the row cap."""
    default_exit_code = 2

    def __init__(self, message: Optional[str] = None, last_row=None):
        self.last_row = last_row
        super().__init__(message)


class InstanceTooLargeError(ColoringError):
    """The brute-force guard was exceeded."""
    default_exit_code = 1


class VerificationError(ColoringError):
    """
    A coloring failed re-verification against its cover.
    :param edge: The first conflicting cover edge, in the cover's color ids.
    """
    default_exit_code = 1

    def __init__(self, message: Optional[str] = None, edge: Optional[tuple] = None):
        self.edge = edge
        super().__init__(message)


class PipelineFailure(ColoringError):
    """A stage of the coloring pipeline could not complete."""
    default_exit_code = 3

    def __init__(self, message: Optional[str] = None, stage: Optional[int] = None):
        self.stage = stage
        if stage is not None and message:
            message = f"stage {stage}: {message}"
        super().__init__(message)


class RetryExhaustedError(PipelineFailure):
    """
    A retry loop reached its cap.
    :param last_report: The violations seen on the final attempt.
    """

    def __init__(self, message: Optional[str] = None, last_report: Optional[Sequence] = None,
                 stage: Optional[int] = None):
        self.last_report = list(last_report) if last_report is not None else []
        super().__init__(message, stage=stage)

    def at_stage(self, stage: int) -> 'RetryExhaustedError':
        """
        Returns a copy of this error tagged with the pipeline stage it happened in.
        """
        return RetryExhaustedError(self.message, last_report=self.last_report, stage=stage)


class InternalError(ColoringError):
    """An internal check failed. Never returned as success."""
    default_exit_code = 70


def exit_code_for(error: BaseException) -> int:
    """
    Maps any exception to the exit code the command-line front end should return.
    Unknown exceptions are internal errors.
    :param error: The caught exception.
    :return: Process exit code.
    """
    if isinstance(error, ColoringError):
        return error.exit_code
    if isinstance(error, (FileNotFoundError, IsADirectoryError, UnicodeDecodeError)):
        return MalformedInputError.default_exit_code
    return InternalError.default_exit_code
