import unittest

import pytest

from src.service.config import load_config, resolve_workers
from src.service.harness_service import cmd_fig
from src.service.reference_tables import FIG_GRIDS


@pytest.mark.quality
@pytest.mark.slow
class TestClosureSweep(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = cmd_fig(load_config(overrides=['n_max=12']), 1, resolve_workers())

    def test_every_grid_point_present(self):
        self.assertEqual(len(self.report.frame), sum(len(values) for values in FIG_GRIDS.values()))

    def test_zeta_stays_near_minus_one(self):
        for _, row in self.report.frame.iterrows():
            self.assertGreater(row['zeta_a'], -1.15, msg=f"{row['panel']}={row['value']}")
            self.assertLess(row['zeta_a'], -0.85, msg=f"{row['panel']}={row['value']}")

    def test_alpha_stays_near_zero(self):
        self.assertLess(self.report.summary['alpha_abs_max'], 0.05)


@pytest.mark.quality
@pytest.mark.slow
class TestRateSweep(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = cmd_fig(load_config(overrides=['n_max=12']), 2, resolve_workers())

    def test_rates_within_factor_two(self):
        for _, row in self.report.frame.iterrows():
            self.assertGreaterEqual(row['ratio'], 0.5, msg=f"{row['panel']}={row['value']}")
            self.assertLessEqual(row['ratio'], 2.0, msg=f"{row['panel']}={row['value']}")

    def test_scaling_exponents(self):
        exponents = self.report.summary['exponents']

        self.assertAlmostEqual(exponents['g'], 2.0, delta=0.05)
        self.assertAlmostEqual(exponents['gamma_ph'], 1.0, delta=0.05)
        self.assertAlmostEqual(exponents['delta_plus'], -2.0, delta=0.1)


if __name__ == '__main__':
    unittest.main()
