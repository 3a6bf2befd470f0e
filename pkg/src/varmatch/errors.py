"""Exception hierarchy.  ``exit_code`` is the CLI exit status for each class."""


class VarmatchError(Exception):
    exit_code = 3


class InputError(VarmatchError, ValueError):
    """Malformed input (shapes, non-finite numbers, schema)."""
    exit_code = 1


class DataError(VarmatchError, ValueError):
    """Infeasible data: block-Toeplitz matrix or target P not positive."""
    exit_code = 2


class FactorizationError(VarmatchError):
    exit_code = 3


class NearBoundaryError(VarmatchError):
    """A linear system at ``A`` is numerically singular; ``A`` is close to the Schur boundary."""
    exit_code = 3


class NewtonError(VarmatchError):
    exit_code = 3


class PathStalled(VarmatchError):
    exit_code = 3


class VerificationFailed(VarmatchError):
    exit_code = 4
