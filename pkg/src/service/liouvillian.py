"""
Rabi / Jaynes-Cummings Hamiltonian and the Lindblad generator built on it.

Vectorization is column-stacking: vec(A rho B) = (B^T kron A) vec(rho), so the
coherent part -i[H, .] becomes -i(I kron H - H^T kron I).
"""
import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch
from .hilbert import (
    AtomOp, DensityMatrix, FieldOp, Operator, TruncatedSpace,
    atom_operator, field_operator,
)
from .validators.input_validator import InputValidator

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    RABI = "rabi"
    JAYNES_CUMMINGS = "jaynes_cummings"


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters in units of the cavity frequency (omega = 1)"""
    omega0: float = 1.0
    g: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    gamma_ph: float = 0.0
    Gamma_ph: float = 0.0
    n_t: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        InputValidator.validate_system_params(self)

    @classmethod
    def from_delta_plus(cls, delta_plus: float, **kwargs) -> 'SystemParams':
        """Build params from Delta_+ = omega + omega0 with omega fixed at 1"""
        return cls(omega0=float(delta_plus) - 1.0, **kwargs)

    @property
    def delta(self) -> float:
        return self.omega0 - self.omega

    @property
    def delta_plus(self) -> float:
        return self.omega + self.omega0

    @property
    def has_energy_damping(self) -> bool:
        return self.kappa > 0 or self.gamma > 0

    def with_updates(self, **changes) -> 'SystemParams':
        """Copy with fields replaced; accepts delta_plus in place of omega0"""
        if 'delta_plus' in changes:
            changes['omega0'] = float(changes.pop('delta_plus')) - self.omega
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data['delta_plus'] = self.delta_plus
        return data


class Channel(NamedTuple):
    label: str
    operator: Operator
    rate: float


class Superoperator:
    """
    Linear map rho -> d(rho)/dt with a sparse vectorized matrix and a matrix-free apply.

    The matrix-free path keeps H_eff = H - (i/2) sum_k r_k L_k^dag L_k and the
    jump terms r_k L_k rho L_k^dag, so apply(rho) = -i(H_eff rho - rho H_eff^dag) + jumps.
    """

    def __init__(self, space: TruncatedSpace, matrix, h_eff: np.ndarray,
                 jumps: Tuple[Tuple[float, np.ndarray], ...],
                 params: Optional[SystemParams] = None, kind: Optional[ModelKind] = None):
        self.space = space
        self._matrix = sparse.csr_matrix(matrix, dtype=complex)
        self._h_eff = h_eff
        self._jumps = jumps
        self.params = params
        self.kind = kind

    @property
    def matrix(self) -> sparse.csr_matrix:
        return self._matrix

    @property
    def dim(self) -> int:
        return self.space.dim_total ** 2

    def apply(self, rho) -> np.ndarray:
        """Matrix-free action on a density matrix (DensityMatrix or ndarray)"""
        if isinstance(rho, DensityMatrix):
            if rho.space != self.space:
                raise DimensionMismatch(
                    params={"state_n_max": rho.space.n_max, "generator_n_max": self.space.n_max},
                    message="State and generator live on different truncated spaces"
                )
            rho = rho.matrix
        out = -1j * (self._h_eff @ rho - rho @ self._h_eff.conj().T)
        for rate, jump in self._jumps:
            out = out + rate * (jump @ rho @ jump.conj().T)
        return out

    def apply_vec(self, vec_rho: np.ndarray) -> np.ndarray:
        return vec(self.apply(unvec(vec_rho, self.space.dim_total)))

    def __add__(self, other: 'Superoperator') -> 'Superoperator':
        if other.space != self.space:
            raise DimensionMismatch(
                params={"left": self.space.n_max, "right": other.space.n_max},
                message="Superoperators live on different truncated spaces"
            )
        return Superoperator(
            self.space,
            self._matrix + other._matrix,
            self._h_eff + other._h_eff,
            self._jumps + other._jumps,
            params=self.params or other.params,
            kind=self.kind or other.kind,
        )

    def __repr__(self) -> str:
        return f"Superoperator(n_max={self.space.n_max}, nnz={self._matrix.nnz})"


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization"""
    return np.asarray(rho).reshape(-1, order='F')


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector).reshape((dim, dim), order='F')


def trace_row(dim: int) -> np.ndarray:
    """Row vector t with t . vec(rho) = Tr(rho)"""
    row = np.zeros(dim * dim, dtype=complex)
    row[np.arange(dim) * (dim + 1)] = 1.0
    return row


def hamiltonian(params: SystemParams, space: TruncatedSpace,
                kind: ModelKind = ModelKind.RABI) -> Operator:
    """
    H = omega n + (omega0/2) sigma_z + g(a sigma_+ + a^dag sigma_-) [+ g(a^dag sigma_+ + a sigma_-)]

    The bracketed anti-rotating term is present only for the Rabi model.
    """
    kind = ModelKind(kind)
    a = field_operator(space, FieldOp.A)
    a_dag = field_operator(space, FieldOp.A_DAG)
    sigma_plus = atom_operator(space, AtomOp.SIGMA_PLUS)
    sigma_minus = atom_operator(space, AtomOp.SIGMA_MINUS)

    h = (params.omega * field_operator(space, FieldOp.N)
         + (params.omega0 / 2.0) * atom_operator(space, AtomOp.SIGMA_Z)
         + params.g * (a @ sigma_plus + a_dag @ sigma_minus))
    if kind is ModelKind.RABI:
        h = h + params.g * (a_dag @ sigma_plus + a @ sigma_minus)
    return h


def coherent(h: Operator) -> Superoperator:
    """-i[H, .] as a superoperator"""
    space = h.space
    identity = sparse.identity(space.dim_total, dtype=complex, format='csr')
    matrix = -1j * (sparse.kron(identity, h.matrix, format='csr')
                    - sparse.kron(h.matrix.T, identity, format='csr'))
    return Superoperator(space, matrix, h.dense(), ())


def dissipator(op: Operator, rate: float) -> Superoperator:
    """
    rate * D[L], D[L] rho = (2 L rho L^dag - L^dag L rho - rho L^dag L) / 2

    Raises:
        InputValidationError: If rate is negative
    """
    InputValidator.validate_rate('rate', rate)
    space = op.space
    dim = space.dim_total
    if rate == 0:
        return Superoperator(space, sparse.csr_matrix((dim * dim, dim * dim), dtype=complex),
                             np.zeros((dim, dim), dtype=complex), ())

    identity = sparse.identity(dim, dtype=complex, format='csr')
    jump = op.matrix
    ldl = (jump.conj().T @ jump).tocsr()
    matrix = rate * (sparse.kron(jump.conj(), jump, format='csr')
                     - 0.5 * sparse.kron(identity, ldl, format='csr')
                     - 0.5 * sparse.kron(ldl.T, identity, format='csr'))
    h_eff = -0.5j * rate * ldl.toarray()
    return Superoperator(space, matrix, h_eff, ((rate, jump.toarray()),))


def collapse_channels(params: SystemParams, space: TruncatedSpace) -> List[Channel]:
    """All six reservoir channels with their rates, zero-rate channels included"""
    n_t = params.n_t
    return [
        Channel('atom_decay', atom_operator(space, AtomOp.SIGMA_MINUS), params.gamma * (n_t + 1.0)),
        Channel('atom_pump', atom_operator(space, AtomOp.SIGMA_PLUS), params.gamma * n_t),
        Channel('cavity_decay', field_operator(space, FieldOp.A), params.kappa * (n_t + 1.0)),
        Channel('cavity_pump', field_operator(space, FieldOp.A_DAG), params.kappa * n_t),
        Channel('atom_dephasing', atom_operator(space, AtomOp.SIGMA_Z), params.gamma_ph / 2.0),
        Channel('cavity_dephasing', field_operator(space, FieldOp.N), params.Gamma_ph / 2.0),
    ]


def assemble(params: SystemParams, space: TruncatedSpace,
             kind: ModelKind = ModelKind.RABI) -> Superoperator:
    """Full generator -i[H, rho] + sum of the reservoir dissipators"""
    kind = ModelKind(kind)
    generator = coherent(hamiltonian(params, space, kind))
    active = [channel for channel in collapse_channels(params, space) if channel.rate > 0]
    for channel in active:
        generator = generator + dissipator(channel.operator, channel.rate)

    generator.params = params
    generator.kind = kind
    logger.debug(f"Assembled {kind.value} generator: n_max={space.n_max}, "
                 f"channels={[c.label for c in active]}, nnz={generator.matrix.nnz}")
    return generator
