import math
import unittest
from dataclasses import replace
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_allclose

from src.domain.dto import ObservableRecord
from src.domain.error_codes import ErrorCode
from src.service.errors import (
    DimensionMismatch, InvalidState, NoConvergence, NonlinearTail, TailOverflow, WindowTooShort,
)
from src.service.evolution_service import (
    RECORD_COLUMNS, ConvergenceProbe, ConvergenceSettings, IntegratorSettings, asymptotic_rate,
    asymptotic_values, default_t_end, evolve, evolve_with_state, observables, records_to_frame,
    relaxation_check, time_grid, truncation_convergence,
)
from src.service.hilbert import DensityMatrix, basis_state, build_space
from src.service.liouvillian import ModelKind, SystemParams, assemble
from src.service.validators.input_validator import InputValidationError


def linear_records(slope, intercept=0.0, count=21, curvature=0.0, zeta=-1.0, alpha=0.0):
    records = []
    for k in range(count):
        t = float(k)
        records.append(ObservableRecord(
            t=t, mean_n=intercept + slope * t + curvature * t * t, mean_sz=-1.0,
            zeta=zeta, alpha=alpha, p_sx=0.0, x_sx=0.0, p_sy=0.0, x_sy=0.0, trace=1.0, tail_pop=0.0,
        ))
    return records


class TestTimeGrid(unittest.TestCase):

    def test_regular_grid(self):
        grid = time_grid(10.0, 1.0)

        self.assertEqual(len(grid), 11)
        self.assertEqual(grid[-1], 10.0)

    def test_off_grid_end_appended(self):
        grid = time_grid(10.5, 1.0)

        self.assertEqual(grid[-1], 10.5)
        self.assertEqual(grid[-2], 10.0)

    def test_invalid_grid(self):
        with self.assertRaises(InputValidationError):
            time_grid(-1.0, 1.0)

    def test_default_horizon(self):
        self.assertAlmostEqual(default_t_end(SystemParams(gamma_ph=0.05)), 600.0)
        with self.assertRaises(InputValidationError) as context:
            default_t_end(SystemParams(g=0.02))
        self.assertEqual(context.exception.code, ErrorCode.INVALID_TIME_GRID)


class TestObservables(unittest.TestCase):

    def test_ground_vacuum(self):
        record = observables(basis_state(build_space(4), 'g', 0), t=2.0)

        self.assertEqual(record.t, 2.0)
        self.assertAlmostEqual(record.mean_n, 0.0)
        self.assertAlmostEqual(record.mean_sz, -1.0)
        self.assertAlmostEqual(record.zeta, -1.0)
        self.assertAlmostEqual(record.alpha, 0.0)
        self.assertAlmostEqual(record.p_sx, 0.0)
        self.assertAlmostEqual(record.trace, 1.0)

    def test_one_photon(self):
        record = observables(basis_state(build_space(4), 'g', 1))

        self.assertAlmostEqual(record.mean_n, 1.0)
        self.assertAlmostEqual(record.zeta, -3.0)

    def test_records_to_frame_columns(self):
        frame = records_to_frame(linear_records(1e-3, count=3))

        self.assertEqual(tuple(frame.columns), RECORD_COLUMNS)
        self.assertEqual(len(frame), 3)


class TestEvolve(unittest.TestCase):

    def setUp(self):
        self.space = build_space(3)
        self.gen = assemble(SystemParams(kappa=0.1), self.space)

    def test_cavity_decay(self):
        records = evolve(basis_state(self.space, 'g', 1), self.gen, t_end=10.0, dt_out=1.0)
        times = np.array([r.t for r in records])
        mean_n = np.array([r.mean_n for r in records])

        self.assertEqual(len(records), 11)
        assert_allclose(mean_n, np.exp(-0.1 * times), rtol=1e-6)
        assert_allclose([r.trace for r in records], 1.0, atol=1e-10)

    def test_result_carries_state_and_stats(self):
        result = evolve_with_state(basis_state(self.space, 'g', 1), self.gen, t_end=5.0)

        self.assertAlmostEqual(result.final_state.trace().real, 1.0)
        self.assertGreater(result.stats['nfev'], 0)
        self.assertEqual(result.stats['n_max'], 3)

    def test_tail_overflow(self):
        space = build_space(2)
        gen = assemble(SystemParams(g=0.02, gamma_ph=0.05), space)

        with self.assertRaises(TailOverflow) as context:
            evolve(basis_state(space, 'e', 2), gen, t_end=2.0)
        self.assertEqual(context.exception.params['n_max'], 2)

    def test_tail_threshold_is_configurable(self):
        space = build_space(2)
        gen = assemble(SystemParams(kappa=0.1), space)
        settings = IntegratorSettings(tail_threshold=1.5)

        records = evolve(basis_state(space, 'g', 2), gen, t_end=2.0, settings=settings)
        self.assertEqual(len(records), 3)

    def test_space_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            evolve(basis_state(build_space(4), 'g', 0), self.gen, t_end=1.0)

    def test_invalid_initial_state(self):
        bad = DensityMatrix(self.space, 2.0 * basis_state(self.space, 'g', 0).matrix)

        with self.assertRaises(InvalidState):
            evolve(bad, self.gen, t_end=1.0)


class TestCounterRotatingPhotons(unittest.TestCase):

    def setUp(self):
        self.space = build_space(4)
        self.params = SystemParams(g=0.05, gamma_ph=0.05, Gamma_ph=0.01, kappa=0.01)

    def test_rotating_wave_model_stays_dark(self):
        gen = assemble(self.params, self.space, ModelKind.JAYNES_CUMMINGS)
        records = evolve(basis_state(self.space, 'g', 0), gen, t_end=50.0)

        self.assertLess(max(r.mean_n for r in records), 1e-10)

    def test_rabi_model_creates_photons(self):
        gen = assemble(self.params, self.space, ModelKind.RABI)
        records = evolve(basis_state(self.space, 'g', 0), gen, t_end=50.0)

        self.assertAlmostEqual(records[0].mean_n, 0.0, places=15)
        self.assertGreater(min(r.mean_n for r in records[1:]), 0.0)


class TestAsymptoticRate(unittest.TestCase):

    def test_exact_line(self):
        estimate = asymptotic_rate(linear_records(2e-5, intercept=0.1))

        self.assertAlmostEqual(estimate.slope, 2e-5, places=15)
        self.assertAlmostEqual(estimate.intercept, 0.1, places=12)
        self.assertEqual(estimate.fit_window, (10.0, 20.0))
        self.assertAlmostEqual(estimate.linearity_r2, 1.0)

    def test_flat_tail(self):
        estimate = asymptotic_rate(linear_records(0.0, intercept=0.3))

        self.assertAlmostEqual(estimate.slope, 0.0, places=15)
        self.assertEqual(estimate.linearity_r2, 1.0)

    def test_too_few_records(self):
        with self.assertRaises(WindowTooShort):
            asymptotic_rate(linear_records(1e-5, count=9))

    def test_window_too_short(self):
        with self.assertRaises(WindowTooShort) as context:
            asymptotic_rate(linear_records(1e-5, count=21), window_fraction=0.2)
        self.assertEqual(context.exception.params['minimum'], 10)

    def test_oscillating_flat_tail_is_not_rejected(self):
        records = [replace(r, mean_n=1e-4 + 1e-6 * (-1) ** k)
                   for k, r in enumerate(linear_records(0.0, count=21))]
        estimate = asymptotic_rate(records)

        self.assertLess(estimate.linearity_r2, 0.999)
        self.assertAlmostEqual(estimate.slope, 0.0, places=15)

    def test_curved_tail(self):
        with self.assertRaises(NonlinearTail):
            asymptotic_rate(linear_records(0.0, curvature=1e-3), min_r2=0.9999)

    def test_asymptotic_values(self):
        values = asymptotic_values(linear_records(1e-5, zeta=-0.97, alpha=0.02))

        self.assertAlmostEqual(values.zeta_a, -0.97)
        self.assertAlmostEqual(values.alpha_a, 0.02)
        self.assertAlmostEqual(values.rate.slope, 1e-5, places=14)


class TestTruncationConvergence(unittest.TestCase):

    def setUp(self):
        self.params = SystemParams(g=0.02, gamma_ph=0.02, gamma=0.01, kappa=0.01)

    @patch('src.service.evolution_service._probe')
    def test_converges_on_ladder(self, mock_probe):
        mock_probe.side_effect = lambda params, kind, n, probe, settings: (1.0 + 10 ** (-n / 2), 1e-12, 1e-14)

        result = truncation_convergence(self.params)

        self.assertEqual(result.n_max, 8)
        self.assertEqual([h['n_max'] for h in result.history], [4, 8, 12])

    @patch('src.service.evolution_service._probe')
    def test_tail_blocks_convergence(self, mock_probe):
        mock_probe.side_effect = lambda params, kind, n, probe, settings: (1.0, 1e-6 if n < 12 else 0.0, 0.0)

        result = truncation_convergence(self.params)

        self.assertEqual(result.n_max, 12)

    @patch('src.service.evolution_service._probe')
    def test_overflow_moves_up(self, mock_probe):
        def probe(params, kind, n, probe, settings):
            if n <= 4:
                raise TailOverflow(params={"tail_pop": 1e-3})
            return 1.0, 0.0, 0.0
        mock_probe.side_effect = probe

        result = truncation_convergence(self.params)

        self.assertEqual(result.n_max, 8)
        self.assertTrue(math.isnan(result.history[0]['value']))

    @patch('src.service.evolution_service._probe')
    def test_no_convergence(self, mock_probe):
        mock_probe.side_effect = lambda params, kind, n, probe, settings: (float(n), 0.0, 0.0)

        with self.assertRaises(NoConvergence) as context:
            truncation_convergence(self.params, probe=ConvergenceProbe.RATE,
                                   settings=ConvergenceSettings(ceiling=16))
        self.assertEqual(context.exception.params['ceiling'], 16)
        self.assertEqual(len(context.exception.params['history']), 4)


class TestRelaxationCheck(unittest.TestCase):

    def test_requires_energy_damping(self):
        with self.assertRaises(InputValidationError) as context:
            relaxation_check(SystemParams(g=0.02, gamma_ph=0.05))
        self.assertEqual(context.exception.code, ErrorCode.INVALID_REGIME)


if __name__ == '__main__':
    unittest.main()
