import unittest

from src.service.hilbert import build_space
from src.service.liouvillian import SystemParams, assemble
from src.service.strategies.dense_strategy import DenseStrategy
from src.service.strategies.direct_strategy import DirectStrategy
from src.service.strategies.strategy_factory import StrategyFactory


class TestStrategyFactory(unittest.TestCase):

    def setUp(self):
        params = SystemParams(g=0.02, gamma_ph=0.02, gamma=0.05, kappa=0.05)
        self.generator = assemble(params, build_space(4))

    def test_create_direct_strategy(self):
        strategy = StrategyFactory.create_strategy('direct', self.generator)

        self.assertIsInstance(strategy, DirectStrategy)
        self.assertEqual(strategy.name, 'direct')
        self.assertTrue(strategy.supports_large_spaces)

    def test_create_dense_strategy(self):
        strategy = StrategyFactory.create_strategy('dense', self.generator, residual_tol=1e-9)

        self.assertIsInstance(strategy, DenseStrategy)
        self.assertEqual(strategy.residual_tol, 1e-9)
        self.assertFalse(strategy.supports_large_spaces)

    def test_create_strategy_with_alias(self):
        self.assertIsInstance(StrategyFactory.create_strategy('svd', self.generator), DenseStrategy)
        self.assertIsInstance(StrategyFactory.create_strategy('sparse', self.generator), DirectStrategy)

    def test_name_is_case_insensitive(self):
        self.assertIsInstance(StrategyFactory.create_strategy('DENSE', self.generator), DenseStrategy)

    def test_default_strategy(self):
        strategy = StrategyFactory.create_strategy(None, self.generator)

        self.assertIsInstance(strategy, DirectStrategy)
        self.assertEqual(StrategyFactory.get_default_strategy(), 'direct')

    def test_invalid_strategy_name(self):
        with self.assertRaises(ValueError) as context:
            StrategyFactory.create_strategy('invalid_strategy', self.generator)

        self.assertIn('Unknown strategy', str(context.exception))

    def test_missing_generator(self):
        with self.assertRaises(ValueError) as context:
            StrategyFactory.create_strategy('direct', generator=None)

        self.assertEqual(str(context.exception), "Generator is required")

    def test_dense_replaced_on_large_space(self):
        large = assemble(SystemParams(g=0.02, gamma=0.05, kappa=0.05), build_space(40))

        with self.assertLogs('src.service.strategies.strategy_factory', level='WARNING'):
            strategy = StrategyFactory.create_strategy('dense', large)
        self.assertIsInstance(strategy, DirectStrategy)

    def test_get_available_strategies(self):
        strategies = StrategyFactory.get_available_strategies()

        self.assertIsInstance(strategies, list)
        for name in ('direct', 'sparse', 'dense', 'svd'):
            self.assertIn(name, strategies)


if __name__ == '__main__':
    unittest.main()
