from typing import Dict, Any, Optional

from src.domain.error_codes import ErrorCode, ErrorResponse


class SimulationError(Exception):
    """Base class for numerical failures, carrying a stable error code"""

    default_code = ErrorCode.INTERNAL_ERROR

    def __init__(
        self,
        params: Optional[Dict[str, Any]] = None,
        message: Optional[str] = None,
        code: Optional[ErrorCode] = None
    ):
        self.code = code or self.default_code
        self.params = params or {}
        self.message = message or self.code.value
        super().__init__(self.message)

    def to_response(self) -> ErrorResponse:
        """Convert to structured error response"""
        return ErrorResponse(self.code, self.params, self.message)


class DimensionMismatch(SimulationError):
    default_code = ErrorCode.DIMENSION_MISMATCH


class InvalidState(SimulationError):
    default_code = ErrorCode.INVALID_STATE


class TailOverflow(SimulationError):
    """Population reached the top of the truncated Fock ladder"""
    default_code = ErrorCode.TAIL_OVERFLOW


class ToleranceFailure(SimulationError):
    """Step control or a solver residual could not meet its target"""
    default_code = ErrorCode.TOLERANCE_FAILURE


class NoSteadyState(SimulationError):
    default_code = ErrorCode.NO_STEADY_STATE


class DegenerateKernel(SimulationError):
    default_code = ErrorCode.DEGENERATE_KERNEL


class WindowTooShort(SimulationError):
    default_code = ErrorCode.WINDOW_TOO_SHORT


class NonlinearTail(SimulationError):
    default_code = ErrorCode.NONLINEAR_TAIL


class NoConvergence(SimulationError):
    default_code = ErrorCode.NO_CONVERGENCE


class SingularSystem(SimulationError):
    default_code = ErrorCode.SINGULAR_SYSTEM


class DivisionByZero(SimulationError, ZeroDivisionError):
    """No closed-form stationary prediction exists without energy damping"""
    default_code = ErrorCode.DIVISION_BY_ZERO
