import logging
from typing import Optional

from ..liouvillian import Superoperator
from .base_strategy import BaseSteadyStateStrategy
from .dense_strategy import DenseStrategy
from .direct_strategy import DirectStrategy

logger = logging.getLogger(__name__)

DEFAULT_STRATEGY = 'direct'


class StrategyFactory:
    """Factory for creating steady-state strategy instances"""

    AVAILABLE_STRATEGIES = {
        'direct': DirectStrategy,
        'sparse': DirectStrategy,  # Alias
        'dense': DenseStrategy,
        'svd': DenseStrategy,  # Alias
    }

    @classmethod
    def create_strategy(
        cls,
        strategy_name: Optional[str] = None,
        generator: Optional[Superoperator] = None,
        **kwargs
    ) -> BaseSteadyStateStrategy:
        """
        Create steady-state strategy instance

        Args:
            strategy_name: Strategy to use ('direct', 'dense'). If None, uses the default
            generator: Assembled Lindblad generator
            **kwargs: Tolerances forwarded to the strategy

        Returns:
            Strategy instance

        Raises:
            ValueError: If strategy name is invalid or no generator is given
        """
        if generator is None:
            raise ValueError("Generator is required")

        strategy_name = (strategy_name or DEFAULT_STRATEGY).lower()

        if strategy_name not in cls.AVAILABLE_STRATEGIES:
            available = ', '.join(cls.AVAILABLE_STRATEGIES.keys())
            raise ValueError(f"Unknown strategy '{strategy_name}'. Available: {available}")

        strategy_class = cls.AVAILABLE_STRATEGIES[strategy_name]

        # dense SVD is cubic in dim_total^2
        if strategy_class is DenseStrategy and not generator.space.is_small:
            logger.warning(f"Dense strategy unsuitable for dim_total={generator.space.dim_total}, "
                           f"falling back to direct strategy")
            strategy_class = DirectStrategy

        return strategy_class(generator, **kwargs)

    @classmethod
    def get_available_strategies(cls) -> list[str]:
        """Get list of available strategy names"""
        return list(cls.AVAILABLE_STRATEGIES.keys())

    @classmethod
    def get_default_strategy(cls) -> str:
        return DEFAULT_STRATEGY
