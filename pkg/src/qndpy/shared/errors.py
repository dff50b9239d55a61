class QndpyError(Exception):
    """Base class for every error raised by the library.

    `exit_code` is the process exit code the CLI uses when the error escapes a
    command.
    """

    exit_code = 1


class ConfigError(QndpyError):
    exit_code = 2


class SignViolation(QndpyError):
    exit_code = 3


class GeometryViolation(QndpyError):
    exit_code = 3


class StabilityViolation(QndpyError):
    exit_code = 3


class ConvergenceFailure(QndpyError):
    pass


class UnknownMode(QndpyError, ValueError):
    pass


class MissingMode(QndpyError, ValueError):
    pass


class DimensionMismatch(QndpyError, ValueError):
    pass


class NonHermitian(QndpyError):
    pass


class TruncationTooSmall(QndpyError):
    exit_code = 4


class VerificationFailed(QndpyError):
    exit_code = 4


class OutOfRange(QndpyError, ValueError):
    pass


class PhaseAliasing(QndpyError):
    exit_code = 5
