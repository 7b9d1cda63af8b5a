"""Exception types raised across the package."""


class EKRError(Exception):
    """Base class for package errors."""


class InvalidArgument(EKRError, ValueError):
    pass


class InstanceTooLarge(EKRError):
    """A size, cap or 64-bit guard was exceeded."""


class UseTranspose(EKRError, ValueError):
    """Cycle-method operations need k <= n; transpose the instance first."""


class PreconditionViolation(EKRError, ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
