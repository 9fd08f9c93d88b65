import time
import warnings

import numpy as np
from scipy.sparse.linalg import MatrixRankWarning, splu

from ..errors import DegenerateKernel
from .base_strategy import BaseSteadyStateStrategy, SteadyStateResult

# Superoperators up to this size also get an explicit singular-value uniqueness check
KERNEL_CHECK_LIMIT = 1024


class DirectStrategy(BaseSteadyStateStrategy):
    """
    Sparse LU solve of the generator with one row traded for Tr(rho) = 1
    """

    @property
    def name(self) -> str:
        return "direct"

    @property
    def supports_large_spaces(self) -> bool:
        return True

    def solve(self) -> SteadyStateResult:
        start_time = time.time()

        second_singular = self._check_kernel() if self.generator.dim <= KERNEL_CHECK_LIMIT else None
        system, rhs = self._trace_system()

        with warnings.catch_warnings():
            warnings.simplefilter('error', MatrixRankWarning)
            try:
                vector = splu(system).solve(rhs)
            except (RuntimeError, MatrixRankWarning) as e:
                raise DegenerateKernel(
                    params={"method": self.name, "reason": str(e)},
                    message="Trace-augmented generator is singular; the stationary state is not unique"
                )

        state = self._finalize(vector)
        metadata = {
            'method': self.name,
            'execution_time': time.time() - start_time,
            'residual': self.residual(state),
            'n_max': self.space.n_max,
            'second_singular_value': second_singular,
        }
        return SteadyStateResult(state, metadata)

    def _check_kernel(self) -> float:
        """
        Second-smallest singular value of the generator

        Raises:
            DegenerateKernel: If it falls below kernel_tol
        """
        singular = np.linalg.svd(self.generator.matrix.toarray(), compute_uv=False)
        second = float(singular[-2])
        if second <= self.kernel_tol:
            raise DegenerateKernel(
                params={"second_singular_value": second, "tolerance": self.kernel_tol},
                message=f"Generator null space is degenerate (second singular value {second:.2e})"
            )
        return second
