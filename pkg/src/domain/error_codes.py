from enum import Enum
from typing import Dict, Any, Optional
import json


class ErrorCode(str, Enum):
    """Error codes for machine-readable failure reports"""

    # Configuration errors
    CONFIG_NOT_FOUND = "CONFIG_NOT_FOUND"
    CONFIG_PARSE_ERROR = "CONFIG_PARSE_ERROR"
    CONFIG_UNKNOWN_KEY = "CONFIG_UNKNOWN_KEY"
    CONFIG_INVALID_VALUE = "CONFIG_INVALID_VALUE"

    # Parameter and input validation errors
    INVALID_TRUNCATION = "INVALID_TRUNCATION"
    INVALID_RATE = "INVALID_RATE"
    INVALID_FREQUENCY = "INVALID_FREQUENCY"
    INVALID_OPERATOR = "INVALID_OPERATOR"
    INVALID_INITIAL_STATE = "INVALID_INITIAL_STATE"
    INVALID_TIME_GRID = "INVALID_TIME_GRID"
    INVALID_REGIME = "INVALID_REGIME"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    INVALID_STATE = "INVALID_STATE"

    # Numerical failures
    TAIL_OVERFLOW = "TAIL_OVERFLOW"
    TOLERANCE_FAILURE = "TOLERANCE_FAILURE"
    NO_STEADY_STATE = "NO_STEADY_STATE"
    DEGENERATE_KERNEL = "DEGENERATE_KERNEL"
    WINDOW_TOO_SHORT = "WINDOW_TOO_SHORT"
    NONLINEAR_TAIL = "NONLINEAR_TAIL"
    NO_CONVERGENCE = "NO_CONVERGENCE"
    SINGULAR_SYSTEM = "SINGULAR_SYSTEM"
    DIVISION_BY_ZERO = "DIVISION_BY_ZERO"

    # Report outcomes
    BOUND_VIOLATION = "BOUND_VIOLATION"

    # System errors
    INTERNAL_ERROR = "INTERNAL_ERROR"


EXIT_SUCCESS = 0
EXIT_INTERNAL_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_CONVERGENCE_FAILURE = 3
EXIT_BOUND_VIOLATION = 4

_CONFIG_CODES = {
    ErrorCode.CONFIG_NOT_FOUND,
    ErrorCode.CONFIG_PARSE_ERROR,
    ErrorCode.CONFIG_UNKNOWN_KEY,
    ErrorCode.CONFIG_INVALID_VALUE,
    ErrorCode.INVALID_TRUNCATION,
    ErrorCode.INVALID_RATE,
    ErrorCode.INVALID_FREQUENCY,
    ErrorCode.INVALID_OPERATOR,
    ErrorCode.INVALID_INITIAL_STATE,
    ErrorCode.INVALID_TIME_GRID,
    ErrorCode.INVALID_REGIME,
    ErrorCode.DIMENSION_MISMATCH,
}


def exit_code_for(code: ErrorCode) -> int:
    """Map an error code to the CLI process exit status"""
    if code in _CONFIG_CODES:
        return EXIT_CONFIG_ERROR
    if code == ErrorCode.BOUND_VIOLATION:
        return EXIT_BOUND_VIOLATION
    if code == ErrorCode.INTERNAL_ERROR:
        return EXIT_INTERNAL_ERROR
    return EXIT_CONVERGENCE_FAILURE


class ErrorResponse:
    """Structured error report written by the CLI on failure"""

    def __init__(
        self,
        code: ErrorCode,
        params: Optional[Dict[str, Any]] = None,
        message: Optional[str] = None
    ):
        """
        Create an error response

        Args:
            code: Stable error code for scripts consuming the report
            params: Values that describe the failure (offending key, residual, ...)
            message: Human-readable message (optional, defaults to code value)
        """
        self.code = code
        self.params = params or {}
        self.message = message or code.value

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert to JSON-serializable dict

        Returns:
            Dict with error code, params, and message
        """
        return {
            "error": {
                "code": self.code.value,
                "params": self.params,
                "message": self.message
            }
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=str)

    @property
    def exit_code(self) -> int:
        return exit_code_for(self.code)
