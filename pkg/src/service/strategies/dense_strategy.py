import time

import numpy as np
from scipy import linalg

from ..errors import DegenerateKernel
from .base_strategy import BaseSteadyStateStrategy, SteadyStateResult


class DenseStrategy(BaseSteadyStateStrategy):
    """
    Null vector of the dense generator from a full singular value decomposition
    """

    @property
    def name(self) -> str:
        return "dense"

    @property
    def supports_large_spaces(self) -> bool:
        return False

    def solve(self) -> SteadyStateResult:
        start_time = time.time()

        _, singular, vh = linalg.svd(self.generator.matrix.toarray())
        second = float(singular[-2])
        if second <= self.kernel_tol:
            raise DegenerateKernel(
                params={"second_singular_value": second, "tolerance": self.kernel_tol},
                message=f"Generator null space is degenerate (second singular value {second:.2e})"
            )

        null_vector = vh[-1].conj()
        trace = null_vector[np.arange(self.space.dim_total) * (self.space.dim_total + 1)].sum()
        state = self._finalize(null_vector / trace)

        metadata = {
            'method': self.name,
            'execution_time': time.time() - start_time,
            'residual': self.residual(state),
            'n_max': self.space.n_max,
            'second_singular_value': second,
            'smallest_singular_value': float(singular[-1]),
        }
        return SteadyStateResult(state, metadata)
