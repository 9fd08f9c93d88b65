import math
import numbers
from typing import Dict, Any, Optional

from src.domain.error_codes import ErrorCode, ErrorResponse

RATE_FIELDS = ('kappa', 'gamma', 'gamma_ph', 'Gamma_ph', 'n_t')


class InputValidationError(Exception):
    """Raised when parameters, configuration or inputs are invalid"""

    def __init__(
        self,
        code: ErrorCode,
        params: Optional[Dict[str, Any]] = None,
        message: Optional[str] = None
    ):
        """
        Create validation error with error code and parameters

        Args:
            code: Stable error code
            params: Offending values (key names, received value, limits)
            message: Human-readable message (optional)
        """
        self.code = code
        self.params = params or {}
        self.message = message or code.value
        super().__init__(self.message)

    def to_response(self) -> ErrorResponse:
        """Convert to structured error response"""
        return ErrorResponse(self.code, self.params, self.message)


class InputValidator:
    """Validates physical parameters and numerical inputs before any computation"""

    @staticmethod
    def validate_truncation(n_max) -> None:
        """
        Validate the Fock-space cutoff

        Raises:
            InputValidationError: If n_max is not an integer >= 1
        """
        if isinstance(n_max, bool) or not isinstance(n_max, numbers.Integral):
            raise InputValidationError(
                code=ErrorCode.INVALID_TRUNCATION,
                params={"n_max": repr(n_max)},
                message=f"n_max must be an integer, got {n_max!r}"
            )

        if n_max < 1:
            raise InputValidationError(
                code=ErrorCode.INVALID_TRUNCATION,
                params={"n_max": int(n_max), "minimum": 1},
                message="n_max must be at least 1 (|g,0> must couple to |e,1>)"
            )

    @staticmethod
    def validate_rate(name: str, value: float) -> None:
        """
        Validate a non-negative finite rate

        Raises:
            InputValidationError: If the rate is negative or not finite
        """
        if value is None or not math.isfinite(value):
            raise InputValidationError(
                code=ErrorCode.INVALID_RATE,
                params={"name": name, "value": value},
                message=f"{name} must be a finite number, got {value!r}"
            )
        if value < 0:
            raise InputValidationError(
                code=ErrorCode.INVALID_RATE,
                params={"name": name, "value": value},
                message=f"{name} must be non-negative, got {value}"
            )

    @staticmethod
    def validate_system_params(params) -> None:
        """
        Validate every field of a SystemParams instance

        Raises:
            InputValidationError: If a rate, coupling or frequency is invalid
        """
        for name in RATE_FIELDS + ('g',):
            InputValidator.validate_rate(name, getattr(params, name))

        if params.omega0 is None or not math.isfinite(params.omega0) or params.omega0 <= -params.omega:
            raise InputValidationError(
                code=ErrorCode.INVALID_FREQUENCY,
                params={"name": "omega0", "value": params.omega0, "minimum_exclusive": -params.omega},
                message=f"omega0 must be finite with delta_plus = omega + omega0 > 0, got {params.omega0}"
            )

        if params.omega != 1.0:
            raise InputValidationError(
                code=ErrorCode.INVALID_FREQUENCY,
                params={"name": "omega", "value": params.omega},
                message="Frequencies are expressed in units of the cavity frequency, omega must be 1"
            )

    @staticmethod
    def validate_time_grid(t_end: float, dt_out: float) -> None:
        """
        Validate an output time grid

        Raises:
            InputValidationError: If t_end or dt_out are not positive
        """
        for name, value in (('t_end', t_end), ('dt_out', dt_out)):
            if value is None or not math.isfinite(value) or value <= 0:
                raise InputValidationError(
                    code=ErrorCode.INVALID_TIME_GRID,
                    params={"name": name, "value": value},
                    message=f"{name} must be positive, got {value!r}"
                )

    @staticmethod
    def validate_window_fraction(window_fraction: float) -> None:
        if not 0.0 < window_fraction <= 1.0:
            raise InputValidationError(
                code=ErrorCode.CONFIG_INVALID_VALUE,
                params={"name": "window_fraction", "value": window_fraction},
                message=f"window_fraction must lie in (0, 1], got {window_fraction}"
            )
