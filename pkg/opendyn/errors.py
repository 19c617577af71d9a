"""Exception hierarchy and CLI exit codes."""

from typing import Any, Dict, Optional


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_POSITIVITY = 4


class OpenDynWarning(UserWarning):
    """Physics caveats surfaced to the user (window size, inhomogeneous terms...)."""


class OpenDynError(Exception):
    """Base class for all opendyn failures."""

    code = "opendyn_error"
    exit_code = EXIT_SOLVER

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "success": False,
            "error_code": self.code,
            "message": self.message,
            "details": self.details,
        }


class ConfigError(OpenDynError):
    code = "config_error"
    exit_code = EXIT_CONFIG


class SolverError(OpenDynError):
    code = "solver_error"
    exit_code = EXIT_SOLVER


class PositivityAbort(SolverError):
    code = "negative_state"
    exit_code = EXIT_POSITIVITY


class QuadratureError(SolverError):
    code = "quadrature_error"


class ExtrapolationError(SolverError):
    """A sampled quantity was queried outside the range it was built on."""

    code = "out_of_range"


class LevelCrossingError(SolverError):
    code = "level_crossing"


class FitError(OpenDynError):
    code = "fit_error"
