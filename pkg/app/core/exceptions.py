"""
Exception hierarchy shared by the services, the CLI and the HTTP routers.

Each error carries the process exit code used by the CLI and the HTTP
status the routers translate it to.
"""
from fastapi import status


class GamError(Exception):
    exit_code: int = 1
    status_code: int = status.HTTP_500_INTERNAL_SERVER_ERROR


class ConfigError(GamError):
    """Invalid parameters: negative lambda, draws <= 0, p < 2, delta outside (0, 1)..."""
    exit_code = 2
    status_code = status.HTTP_400_BAD_REQUEST


class DataError(GamError):
    """Invalid data: NaN/Inf cells, shape mismatches, bad labels, malformed files."""
    exit_code = 3
    status_code = status.HTTP_422_UNPROCESSABLE_ENTITY


class NonConvergenceError(GamError):
    exit_code = 4
    status_code = status.HTTP_409_CONFLICT


class BoundViolationError(GamError):
    exit_code = 5
    status_code = status.HTTP_409_CONFLICT


class UnsupportedLossError(ConfigError):
    pass


class UnboundedLossError(ConfigError):
    """Raised when a certificate needs a finite Lipschitz constant or bound."""


class OracleTooLargeError(ConfigError):
    def __init__(self, basis_size: int, cap: int, p: int, m: int):
        self.basis_size = basis_size
        self.cap = cap
        super().__init__(
            f"Triangle basis has {basis_size} functions (p={p}, m={m}), "
            f"exceeding the cap of {cap}"
        )
