import logging
from typing import Optional

from .errors import NoSteadyState, ToleranceFailure
from .hilbert import DensityMatrix
from .liouvillian import ModelKind, Superoperator
from .strategies.base_strategy import KERNEL_TOL, RESIDUAL_TOL, SteadyStateResult
from .strategies.dense_strategy import DenseStrategy
from .strategies.strategy_factory import StrategyFactory

logger = logging.getLogger(__name__)


class SteadyStateService:
    def __init__(self, generator: Superoperator, method: Optional[str] = None,
                 fallback: bool = True, residual_tol: float = RESIDUAL_TOL,
                 kernel_tol: float = KERNEL_TOL):
        """
        Initialize SteadyStateService

        Args:
            generator: Assembled Lindblad generator
            method: Strategy name ('direct', 'dense'). If None, uses the factory default
            fallback: Retry with the dense strategy when the direct solve misses its tolerance
            residual_tol: Maximum allowed max-norm of L(rho_inf)
            kernel_tol: Minimum second singular value for a unique kernel
        """
        self.generator = generator
        self.fallback = fallback
        self.tolerances = {'residual_tol': residual_tol, 'kernel_tol': kernel_tol}
        self.strategy = StrategyFactory.create_strategy(
            strategy_name=method,
            generator=generator,
            **self.tolerances
        )
        logger.debug(f"Initialized SteadyStateService with strategy: {self.strategy.name}")

    def solve(self) -> SteadyStateResult:
        """
        Compute the unique stationary state

        Raises:
            NoSteadyState: If the Rabi generator has dephasing but no energy damping
            DegenerateKernel: If the stationary state is not unique
            ToleranceFailure: If no strategy meets the residual tolerance
        """
        self._check_existence()
        space = self.generator.space
        logger.info(f"Solving steady state with {self.strategy.name} strategy, n_max={space.n_max}")

        try:
            result = self._execute_with_fallback()
        except Exception as e:
            logger.error(f"Steady-state solve failed: {e}")
            raise

        logger.info(f"Steady state found in {result.execution_time:.3f}s, residual={result.residual:.2e}")
        return result

    def _check_existence(self) -> None:
        params = self.generator.params
        if params is None or self.generator.kind is not ModelKind.RABI:
            return
        dephasing = params.gamma_ph > 0 or params.Gamma_ph > 0
        if dephasing and not params.has_energy_damping:
            raise NoSteadyState(
                params={"kappa": params.kappa, "gamma": params.gamma,
                        "gamma_ph": params.gamma_ph, "Gamma_ph": params.Gamma_ph},
                message="Photon number grows without bound under dephasing without kappa or gamma; "
                        "use the rate command instead"
            )

    def _execute_with_fallback(self) -> SteadyStateResult:
        """Execute the solve with automatic fallback to the dense strategy"""
        try:
            return self.strategy.solve()
        except ToleranceFailure as e:
            can_fallback = (self.fallback
                            and not isinstance(self.strategy, DenseStrategy)
                            and self.generator.space.is_small)

            if can_fallback:
                logger.warning(f"{self.strategy.name} strategy failed: {e}")
                logger.warning("Falling back to dense strategy")

                dense_strategy = DenseStrategy(self.generator, **self.tolerances)
                result = dense_strategy.solve()

                result.metadata['fallback_used'] = True
                result.metadata['original_strategy'] = self.strategy.name
                result.metadata['fallback_reason'] = str(e)

                return result
            else:
                raise


def steady_state(generator: Superoperator, method: Optional[str] = None,
                 fallback: bool = True) -> DensityMatrix:
    """Stationary state rho_inf with L(rho_inf) = 0 and Tr rho_inf = 1"""
    return SteadyStateService(generator, method=method, fallback=fallback).solve().state
