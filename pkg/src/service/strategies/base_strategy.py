import math
from abc import ABC, abstractmethod
from typing import Dict, Any, Optional

import numpy as np

from ..errors import InvalidState, ToleranceFailure
from ..hilbert import DensityMatrix, validate_density_matrix
from ..liouvillian import Superoperator, trace_row, unvec

RESIDUAL_TOL = 1e-10
KERNEL_TOL = 1e-8


class SteadyStateResult:
    """Wrapper for a stationary state with solver metadata"""
    def __init__(self, state: DensityMatrix, metadata: Optional[Dict[str, Any]] = None):
        self.state = state
        self.metadata = metadata or {}
        self.method_used = self.metadata.get('method', 'unknown')
        self.execution_time = self.metadata.get('execution_time', 0)
        self.residual = self.metadata.get('residual', math.nan)


class BaseSteadyStateStrategy(ABC):
    """Abstract base class for stationary-state solvers of a Lindblad generator"""

    def __init__(self, generator: Superoperator,
                 residual_tol: float = RESIDUAL_TOL,
                 kernel_tol: float = KERNEL_TOL):
        self.generator = generator
        self.space = generator.space
        self.residual_tol = residual_tol
        self.kernel_tol = kernel_tol

    def _trace_system(self):
        """Generator with its first row replaced by the trace row, and the matching right-hand side"""
        dim = self.space.dim_total
        system = self.generator.matrix.tolil(copy=True)
        system[0, :] = trace_row(dim)
        rhs = np.zeros(dim * dim, dtype=complex)
        rhs[0] = 1.0
        return system.tocsc(), rhs

    def _finalize(self, vector: np.ndarray) -> DensityMatrix:
        """
        Hermitize, normalize and check a candidate kernel vector

        Raises:
            ToleranceFailure: If the residual or a state invariant misses its tolerance
        """
        if not np.all(np.isfinite(vector)):
            raise ToleranceFailure(params={"method": self.name},
                                   message="Steady-state solve produced non-finite entries")

        candidate = DensityMatrix(self.space, unvec(vector, self.space.dim_total))
        try:
            state = candidate.normalized()
        except InvalidState as e:
            raise ToleranceFailure(params={"method": self.name, **e.params}, message=e.message)

        residual = self.residual(state)
        if residual > self.residual_tol:
            raise ToleranceFailure(
                params={"method": self.name, "residual": residual, "tolerance": self.residual_tol},
                message=f"Steady-state residual {residual:.3e} exceeds {self.residual_tol:.1e}"
            )

        try:
            validate_density_matrix(state)
        except InvalidState as e:
            raise ToleranceFailure(params={"method": self.name, **e.params}, message=e.message)
        return state

    def residual(self, state: DensityMatrix) -> float:
        """max-norm of the generator applied to the state, via the matrix-free path"""
        return float(np.max(np.abs(self.generator.apply(state))))

    @abstractmethod
    def solve(self) -> SteadyStateResult:
        """
        Compute the stationary state of the generator

        Returns:
            SteadyStateResult with the state and metadata
        """
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        """Strategy name for logging/debugging"""
        pass

    @property
    @abstractmethod
    def supports_large_spaces(self) -> bool:
        """Whether this strategy scales past the dense dimension limit"""
        pass
