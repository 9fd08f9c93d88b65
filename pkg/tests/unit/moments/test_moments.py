import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from src.domain.dto import ObservableRecord
from src.service import analytic
from src.service.errors import SingularSystem, WindowTooShort
from src.service.liouvillian import SystemParams
from src.service.moments import (
    COLUMNS, VACUUM_CLOSURE, Closure, MomentState, closure_from_records, correlator_fixed_point,
    integrate_moments, moment_matrix, moment_rhs, moment_stationary, propagate_exact,
)


def make_records(zetas, alphas, dt=1.0):
    return [ObservableRecord(t=k * dt, mean_n=0.0, mean_sz=-1.0, zeta=z, alpha=a, p_sx=0.0,
                             x_sx=0.0, p_sy=0.0, x_sy=0.0, trace=1.0, tail_pop=0.0)
            for k, (z, a) in enumerate(zip(zetas, alphas))]


class TestMomentState(unittest.TestCase):

    def test_defaults_are_ground_vacuum(self):
        state = MomentState()

        assert_allclose(state.to_vector(), [0, -1, 0, 0, 0, 0])
        self.assertEqual(COLUMNS[0], 'mean_n')

    def test_from_record(self):
        record = make_records([-1.0], [0.0])[0]

        self.assertEqual(MomentState.from_record(record), MomentState())

    def test_addition_and_finiteness(self):
        total = MomentState() + MomentState(mean_n=1.0, mean_sz=1.0)

        self.assertEqual(total.mean_n, 1.0)
        self.assertEqual(total.mean_sz, 0.0)
        self.assertFalse(MomentState(mean_n=math.nan).is_finite())


class TestMomentMatrix(unittest.TestCase):

    def test_vacuum_source_terms(self):
        params = SystemParams(g=0.02, gamma_ph=0.05, kappa=0.01, gamma=0.02, n_t=0.5)
        m, b = moment_matrix(params)
        s = math.sqrt(2.0) * 0.02

        assert_allclose(b, [0.005, -0.01, -s, 0.0, 0.0, s])
        self.assertAlmostEqual(m[1, 1], -0.02)
        self.assertAlmostEqual(m[2, 2], -analytic.chi(params))

    def test_rhs_from_ground_vacuum(self):
        rhs = moment_rhs(MomentState(), SystemParams(g=0.02, gamma_ph=0.05))

        self.assertAlmostEqual(rhs.p_sx, -math.sqrt(2.0) * 0.02)
        self.assertAlmostEqual(rhs.x_sy, math.sqrt(2.0) * 0.02)
        self.assertEqual(rhs.mean_n, 0.0)

    def test_time_dependent_closure(self):
        closure = Closure(zeta=lambda t: -1.0 - t, alpha=0.5)

        self.assertFalse(closure.is_constant)
        self.assertEqual(closure.at(2.0), (-3.0, 0.5))
        _, b = moment_matrix(SystemParams(g=0.1), closure, t=2.0)
        self.assertAlmostEqual(b[5], math.sqrt(2.0) * 0.1 * 3.0)


class TestFixedPoints(unittest.TestCase):

    def test_vacuum_fixed_point_gives_closed_form_rate(self):
        params = SystemParams.from_delta_plus(2.0, g=0.02, gamma_ph=0.05)
        p_sx, x_sx, p_sy, x_sy = correlator_fixed_point(params)

        self.assertAlmostEqual(-math.sqrt(2.0) * params.g * p_sx,
                               analytic.photon_rate_asymptotic(params), places=15)
        self.assertAlmostEqual(p_sx, -x_sy, places=15)
        self.assertAlmostEqual(p_sx, analytic.correlator_asymptote(params), places=6)

    def test_fixed_point_solves_block(self):
        params = SystemParams(omega0=0.7, g=0.03, gamma_ph=0.02, kappa=0.01, gamma=0.01)
        closure = Closure(zeta=-0.98, alpha=0.01)
        solution = np.array(correlator_fixed_point(params, closure))
        m, b = moment_matrix(params, closure)

        assert_allclose(m[2:, 2:] @ solution + b[2:], 0.0, atol=1e-15)

    def test_undamped_block_is_singular(self):
        with self.assertRaises(SingularSystem) as context:
            correlator_fixed_point(SystemParams(g=0.02))
        self.assertEqual(context.exception.params['chi'], 0.0)

    def test_time_dependent_closure_has_no_fixed_point(self):
        with self.assertRaises(SingularSystem):
            correlator_fixed_point(SystemParams(g=0.02, gamma_ph=0.05), Closure(zeta=lambda t: -1.0))

    def test_stationary_matches_analytic(self):
        params = SystemParams.from_delta_plus(1.4, g=0.02, gamma_ph=0.002, gamma=0.01, kappa=0.01, n_t=0.3)
        state = moment_stationary(params)
        n_inf, sz_inf = analytic.stationary(params)

        self.assertAlmostEqual(state.mean_n, n_inf, places=12)
        self.assertAlmostEqual(state.mean_sz, sz_inf, places=12)

    def test_stationary_needs_energy_damping(self):
        with self.assertRaises(SingularSystem):
            moment_stationary(SystemParams(g=0.02, gamma_ph=0.05, gamma=0.01))


class TestIntegration(unittest.TestCase):

    def setUp(self):
        self.params = SystemParams.from_delta_plus(2.0, g=0.02, gamma_ph=0.05)

    def test_integration_matches_matrix_exponential(self):
        trajectory = integrate_moments(MomentState(), self.params, t_end=50.0, dt_out=5.0)
        exact = propagate_exact(MomentState(), self.params, times=trajectory.times)

        self.assertEqual(len(trajectory), 11)
        assert_allclose(trajectory.values, exact.values, atol=1e-8)

    def test_late_slope_is_closed_form_rate(self):
        trajectory = integrate_moments(MomentState(), self.params, t_end=800.0, dt_out=1.0)
        late = trajectory.times >= 400.0
        slope = np.polyfit(trajectory.times[late], trajectory.values[late, 0], 1)[0]

        self.assertAlmostEqual(slope / analytic.photon_rate_asymptotic(self.params), 1.0, places=5)

    def test_constant_callable_closure_matches_constant(self):
        constant = integrate_moments(MomentState(), self.params, t_end=30.0)
        dynamic = integrate_moments(MomentState(), self.params,
                                    Closure(zeta=lambda t: -1.0, alpha=lambda t: 0.0), t_end=30.0)

        assert_allclose(dynamic.values, constant.values, atol=1e-11)

    def test_damped_system_relaxes_to_stationary(self):
        params = SystemParams(g=0.02, gamma_ph=0.02, gamma=0.05, kappa=0.05)
        trajectory = integrate_moments(MomentState(), params, t_end=600.0, dt_out=10.0)
        stationary = moment_stationary(params)

        assert_allclose(trajectory.final.to_vector(), stationary.to_vector(), atol=1e-8)

    def test_to_frame(self):
        frame = integrate_moments(MomentState(), self.params, t_end=5.0).to_frame()

        self.assertEqual(list(frame.columns), ['t'] + list(COLUMNS))
        self.assertEqual(len(frame), 6)

    def test_exact_propagation_needs_constant_closure(self):
        with self.assertRaises(SingularSystem):
            propagate_exact(MomentState(), self.params, Closure(alpha=lambda t: 0.0), times=[0.0, 1.0])


class TestClosureFromRecords(unittest.TestCase):

    def test_window_means(self):
        records = make_records([-2.0] * 5 + [-1.0] * 6, [0.0] * 5 + [0.2] * 6)
        closure = closure_from_records(records, window_fraction=0.5)

        self.assertAlmostEqual(closure.zeta, -1.0)
        self.assertAlmostEqual(closure.alpha, 0.2)

    def test_time_dependent_interpolates(self):
        records = make_records([-1.0, -2.0, -3.0], [0.0, 0.1, 0.2])
        closure = closure_from_records(records, time_dependent=True)

        zeta, alpha = closure.at(1.5)
        self.assertAlmostEqual(zeta, -2.5)
        self.assertAlmostEqual(alpha, 0.15)

    def test_too_few_records(self):
        with self.assertRaises(WindowTooShort):
            closure_from_records(make_records([-1.0], [0.0]))

    def test_vacuum_closure_values(self):
        self.assertEqual(VACUUM_CLOSURE.at(0.0), (-1.0, 0.0))


if __name__ == '__main__':
    unittest.main()
