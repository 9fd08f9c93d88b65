import json
import unittest

from src.domain.error_codes import (
    EXIT_BOUND_VIOLATION, EXIT_CONFIG_ERROR, EXIT_CONVERGENCE_FAILURE, EXIT_INTERNAL_ERROR,
    ErrorCode, ErrorResponse, exit_code_for,
)
from src.service.errors import (
    DegenerateKernel, DivisionByZero, NoSteadyState, SimulationError, TailOverflow, ToleranceFailure,
)
from src.service.validators.input_validator import InputValidationError


class TestErrorCode(unittest.TestCase):

    def test_all_error_codes_unique(self):
        codes = [code.value for code in ErrorCode]
        unique_codes = set(codes)

        self.assertEqual(len(codes), len(unique_codes), "Error codes must be unique")

    def test_error_code_values_are_strings(self):
        for code in ErrorCode:
            self.assertIsInstance(code.value, str)

    def test_error_code_coverage(self):
        expected_codes = [
            'CONFIG_NOT_FOUND',
            'CONFIG_PARSE_ERROR',
            'CONFIG_UNKNOWN_KEY',
            'CONFIG_INVALID_VALUE',
            'INVALID_TRUNCATION',
            'INVALID_RATE',
            'INVALID_FREQUENCY',
            'INVALID_OPERATOR',
            'INVALID_INITIAL_STATE',
            'INVALID_TIME_GRID',
            'INVALID_REGIME',
            'DIMENSION_MISMATCH',
            'INVALID_STATE',
            'TAIL_OVERFLOW',
            'TOLERANCE_FAILURE',
            'NO_STEADY_STATE',
            'DEGENERATE_KERNEL',
            'WINDOW_TOO_SHORT',
            'NONLINEAR_TAIL',
            'NO_CONVERGENCE',
            'SINGULAR_SYSTEM',
            'DIVISION_BY_ZERO',
            'BOUND_VIOLATION',
            'INTERNAL_ERROR',
        ]

        actual_codes = [code.value for code in ErrorCode]

        for expected in expected_codes:
            self.assertIn(expected, actual_codes, f"Missing error code: {expected}")


class TestExitCodes(unittest.TestCase):

    def test_config_and_validation_codes_exit_two(self):
        for code in (ErrorCode.CONFIG_UNKNOWN_KEY, ErrorCode.INVALID_RATE, ErrorCode.INVALID_TRUNCATION):
            self.assertEqual(exit_code_for(code), EXIT_CONFIG_ERROR)

    def test_numerical_codes_exit_three(self):
        for code in (ErrorCode.TAIL_OVERFLOW, ErrorCode.NO_STEADY_STATE, ErrorCode.NO_CONVERGENCE):
            self.assertEqual(exit_code_for(code), EXIT_CONVERGENCE_FAILURE)

    def test_bound_violation_and_internal(self):
        self.assertEqual(exit_code_for(ErrorCode.BOUND_VIOLATION), EXIT_BOUND_VIOLATION)
        self.assertEqual(exit_code_for(ErrorCode.INTERNAL_ERROR), EXIT_INTERNAL_ERROR)


class TestErrorResponse(unittest.TestCase):

    def test_to_dict_structure(self):
        response = ErrorResponse(ErrorCode.INVALID_RATE, {"name": "kappa", "value": -1.0}, "kappa negative")
        result = response.to_dict()

        self.assertIn('error', result)
        self.assertEqual(result['error']['code'], 'INVALID_RATE')
        self.assertEqual(result['error']['params']['name'], 'kappa')
        self.assertEqual(result['error']['message'], 'kappa negative')

    def test_default_message_is_code(self):
        response = ErrorResponse(ErrorCode.NO_CONVERGENCE)

        self.assertEqual(response.message, 'NO_CONVERGENCE')
        self.assertEqual(response.params, {})

    def test_to_json_is_parseable(self):
        response = ErrorResponse(ErrorCode.TAIL_OVERFLOW, {"tail_pop": 1e-3})
        parsed = json.loads(response.to_json())

        self.assertEqual(parsed['error']['params']['tail_pop'], 1e-3)
        self.assertEqual(response.exit_code, EXIT_CONVERGENCE_FAILURE)


class TestExceptionTypes(unittest.TestCase):

    def test_input_validation_error_to_response(self):
        error = InputValidationError(ErrorCode.INVALID_TRUNCATION, {"n_max": 0}, "n_max too small")
        response = error.to_response()

        self.assertEqual(response.code, ErrorCode.INVALID_TRUNCATION)
        self.assertEqual(response.params['n_max'], 0)
        self.assertEqual(str(error), "n_max too small")

    def test_simulation_error_default_codes(self):
        self.assertEqual(TailOverflow().code, ErrorCode.TAIL_OVERFLOW)
        self.assertEqual(ToleranceFailure().code, ErrorCode.TOLERANCE_FAILURE)
        self.assertEqual(NoSteadyState().code, ErrorCode.NO_STEADY_STATE)
        self.assertEqual(DegenerateKernel().code, ErrorCode.DEGENERATE_KERNEL)
        self.assertEqual(SimulationError().code, ErrorCode.INTERNAL_ERROR)

    def test_division_by_zero_is_zero_division_error(self):
        with self.assertRaises(ZeroDivisionError):
            raise DivisionByZero(params={"zero_rates": ["kappa"]})

    def test_simulation_error_to_response(self):
        response = TailOverflow(params={"n_max": 8}, message="overflow").to_response()

        self.assertEqual(response.to_dict()['error']['code'], 'TAIL_OVERFLOW')
        self.assertEqual(response.to_dict()['error']['params'], {"n_max": 8})


if __name__ == '__main__':
    unittest.main()
