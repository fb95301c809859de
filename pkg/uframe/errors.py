"""
Exception types raised by the package.

Every error carries a human readable ``detail`` and the process exit code the
CLI should terminate with, the same way an HTTP error carries its status code.
"""


class UFrameError(Exception):
    """
    Base error for invalid numerical input or a failed validation.
    """

    exit_code: int = 2

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ShapeMismatchError(UFrameError):
    pass


class NotHermitianError(UFrameError):
    pass


class NotPositiveError(UFrameError):
    pass


class SingularOperatorError(UFrameError):
    pass


class SingularFrameError(UFrameError):
    """
    The frame operator is not invertible: the operators do not span the space.
    """


class InvalidPovmError(UFrameError):
    pass


class InvalidStateError(UFrameError):
    pass


class InvalidProbabilityError(UFrameError):
    pass


class VanishingTraceError(UFrameError):
    """
    Some Tr[U nu*] vanishes, so the abelian covariant frame is not a frame.
    """


class ConfigurationError(UFrameError):
    pass


class DimensionError(UFrameError):
    pass


class InvalidDualError(UFrameError):
    """
    A covariant xi violates Tr[xi] = 1 or Tr[nu^T xi] = d.
    """
