"""
Truncated atom (x) cavity Hilbert space and the operators acting on it.

Basis ordering is atom-major: index = s * (n_max + 1) + k with s = 0 for |g>
and s = 1 for |e>, k the Fock index. Composite operators are therefore
kron(atom_factor, field_factor).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, InvalidState
from .validators.input_validator import InputValidator, InputValidationError
from src.domain.error_codes import ErrorCode

logger = logging.getLogger(__name__)

# Operators and states at or below this dimension are also handled densely
DENSE_DIM_LIMIT = 64


class AtomLevel(str, Enum):
    GROUND = "g"
    EXCITED = "e"

    @property
    def index(self) -> int:
        return 0 if self is AtomLevel.GROUND else 1


class FieldOp(str, Enum):
    A = "a"
    A_DAG = "a_dag"
    N = "n"
    X = "x"
    P = "p"


class AtomOp(str, Enum):
    SIGMA_PLUS = "sigma_plus"
    SIGMA_MINUS = "sigma_minus"
    SIGMA_X = "sigma_x"
    SIGMA_Y = "sigma_y"
    SIGMA_Z = "sigma_z"


@dataclass(frozen=True)
class TruncatedSpace:
    n_max: int

    @property
    def dim_field(self) -> int:
        return self.n_max + 1

    @property
    def dim_total(self) -> int:
        return 2 * self.dim_field

    @property
    def is_small(self) -> bool:
        return self.dim_total <= DENSE_DIM_LIMIT

    def index(self, atom: Union[AtomLevel, str], k: int) -> int:
        """Position of |atom, k> in the atom-major basis"""
        atom = AtomLevel(atom)
        if not 0 <= k <= self.n_max:
            raise InputValidationError(
                code=ErrorCode.INVALID_INITIAL_STATE,
                params={"k": k, "n_max": self.n_max},
                message=f"Fock index {k} outside 0..{self.n_max}"
            )
        return atom.index * self.dim_field + k

    def identity(self) -> 'Operator':
        return Operator(self, sparse.identity(self.dim_total, dtype=complex, format='csr'))


class Operator:
    """Immutable sparse complex matrix on a TruncatedSpace"""

    __slots__ = ('space', '_matrix')

    def __init__(self, space: TruncatedSpace, matrix):
        matrix = sparse.csr_matrix(matrix, dtype=complex)
        if matrix.shape != (space.dim_total, space.dim_total):
            raise DimensionMismatch(
                params={"expected": space.dim_total, "shape": list(matrix.shape)},
                message=f"Operator shape {matrix.shape} does not match dim_total={space.dim_total}"
            )
        matrix.eliminate_zeros()
        self.space = space
        self._matrix = matrix

    @property
    def matrix(self) -> sparse.csr_matrix:
        return self._matrix

    def dense(self) -> np.ndarray:
        return self._matrix.toarray()

    def dag(self) -> 'Operator':
        return Operator(self.space, self._matrix.conj().T)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        diff = self._matrix - self._matrix.conj().T
        return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= atol

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self._matrix @ np.asarray(vector, dtype=complex)

    def _check_space(self, other: 'Operator') -> None:
        if other.space != self.space:
            raise DimensionMismatch(
                params={"left": self.space.n_max, "right": other.space.n_max},
                message="Operators live on different truncated spaces"
            )

    def __add__(self, other: 'Operator') -> 'Operator':
        self._check_space(other)
        return Operator(self.space, self._matrix + other._matrix)

    def __sub__(self, other: 'Operator') -> 'Operator':
        self._check_space(other)
        return Operator(self.space, self._matrix - other._matrix)

    def __neg__(self) -> 'Operator':
        return Operator(self.space, -self._matrix)

    def __mul__(self, scalar) -> 'Operator':
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.space, self._matrix * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> 'Operator':
        return Operator(self.space, self._matrix / complex(scalar))

    def __matmul__(self, other: 'Operator') -> 'Operator':
        self._check_space(other)
        return Operator(self.space, self._matrix @ other._matrix)

    def __repr__(self) -> str:
        return f"Operator(n_max={self.space.n_max}, nnz={self._matrix.nnz})"


def commutator(left: Operator, right: Operator) -> Operator:
    return left @ right - right @ left


class DensityMatrix:
    """Dense complex density matrix; invariants are checked by validate_density_matrix"""

    __slots__ = ('space', '_matrix')

    def __init__(self, space: TruncatedSpace, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (space.dim_total, space.dim_total):
            raise DimensionMismatch(
                params={"expected": space.dim_total, "shape": list(matrix.shape)},
                message=f"Density matrix shape {matrix.shape} does not match dim_total={space.dim_total}"
            )
        matrix.flags.writeable = False
        self.space = space
        self._matrix = matrix

    @classmethod
    def from_ket(cls, space: TruncatedSpace, ket) -> 'DensityMatrix':
        ket = np.asarray(ket, dtype=complex).ravel()
        norm = np.linalg.norm(ket)
        if norm == 0:
            raise InvalidState(params={"norm": 0.0}, message="Zero state vector")
        ket = ket / norm
        return cls(space, np.outer(ket, ket.conj()))

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def trace(self) -> complex:
        return complex(np.trace(self._matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self._matrix - self._matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        hermitian_part = 0.5 * (self._matrix + self._matrix.conj().T)
        return float(np.linalg.eigvalsh(hermitian_part)[0])

    def normalized(self) -> 'DensityMatrix':
        """Hermitian part rescaled to unit trace"""
        hermitian_part = 0.5 * (self._matrix + self._matrix.conj().T)
        trace = np.trace(hermitian_part).real
        if trace <= 0:
            raise InvalidState(params={"trace": trace}, message="Cannot normalize a state with non-positive trace")
        return DensityMatrix(self.space, hermitian_part / trace)

    def __repr__(self) -> str:
        return f"DensityMatrix(n_max={self.space.n_max})"


def build_space(n_max: int) -> TruncatedSpace:
    """
    Build the truncated composite space of dimension 2 * (n_max + 1)

    Raises:
        InputValidationError: If n_max < 1
    """
    InputValidator.validate_truncation(n_max)
    return TruncatedSpace(int(n_max))


def _field_factor(space: TruncatedSpace, which: FieldOp) -> sparse.csr_matrix:
    a = sparse.diags(np.sqrt(np.arange(1, space.dim_field, dtype=float)), offsets=1,
                     shape=(space.dim_field, space.dim_field), format='csr', dtype=complex)
    a_dag = a.conj().T.tocsr()
    if which is FieldOp.A:
        return a
    if which is FieldOp.A_DAG:
        return a_dag
    if which is FieldOp.N:
        return sparse.diags(np.arange(space.dim_field, dtype=float), format='csr', dtype=complex)
    if which is FieldOp.X:
        return ((a + a_dag) / np.sqrt(2.0)).tocsr()
    return ((a - a_dag) / (np.sqrt(2.0) * 1j)).tocsr()


_ATOM_FACTORS = {
    # basis (g, e); sigma_plus = |e><g|
    AtomOp.SIGMA_PLUS: np.array([[0, 0], [1, 0]], dtype=complex),
    AtomOp.SIGMA_MINUS: np.array([[0, 1], [0, 0]], dtype=complex),
    AtomOp.SIGMA_X: np.array([[0, 1], [1, 0]], dtype=complex),
    AtomOp.SIGMA_Y: np.array([[0, 1j], [-1j, 0]], dtype=complex),
    AtomOp.SIGMA_Z: np.array([[-1, 0], [0, 1]], dtype=complex),
}


def _parse_enum(enum_cls, which):
    try:
        return enum_cls(which)
    except ValueError:
        raise InputValidationError(
            code=ErrorCode.INVALID_OPERATOR,
            params={"operator": str(which), "allowed": [m.value for m in enum_cls]},
            message=f"Unknown operator {which!r}"
        )


def field_operator(space: TruncatedSpace, which: Union[FieldOp, str]) -> Operator:
    """Cavity operator (a, a_dag, n, x, p) acting as identity on the atom"""
    which = _parse_enum(FieldOp, which)
    atom_identity = sparse.identity(2, dtype=complex, format='csr')
    return Operator(space, sparse.kron(atom_identity, _field_factor(space, which), format='csr'))


def atom_operator(space: TruncatedSpace, which: Union[AtomOp, str]) -> Operator:
    """Atomic operator (sigma_+, sigma_-, sigma_x, sigma_y, sigma_z) acting as identity on the field"""
    which = _parse_enum(AtomOp, which)
    field_identity = sparse.identity(space.dim_field, dtype=complex, format='csr')
    return Operator(space, sparse.kron(sparse.csr_matrix(_ATOM_FACTORS[which]), field_identity, format='csr'))


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """
    Tr(rho * op)

    Raises:
        DimensionMismatch: If rho and op live on different spaces
    """
    if rho.space != op.space:
        raise DimensionMismatch(
            params={"state_n_max": rho.space.n_max, "operator_n_max": op.space.n_max},
            message="State and operator live on different truncated spaces"
        )
    # Tr(op rho) = sum_ij op_ij rho_ji
    return complex(op.matrix.multiply(rho.matrix.T).sum())


def basis_state(space: TruncatedSpace, atom: Union[AtomLevel, str], k: int) -> DensityMatrix:
    """Projector |atom, k><atom, k|"""
    matrix = np.zeros((space.dim_total, space.dim_total), dtype=complex)
    idx = space.index(atom, k)
    matrix[idx, idx] = 1.0
    return DensityMatrix(space, matrix)


def fock_product_state(space: TruncatedSpace, atom_amplitudes, field_amplitudes) -> DensityMatrix:
    """
    Pure product state (a_g|g> + a_e|e>) (x) sum_k c_k |k>, normalized.

    Raises:
        InputValidationError: If the amplitude vectors have the wrong length or vanish
    """
    atom = np.asarray(atom_amplitudes, dtype=complex)
    field = np.asarray(field_amplitudes, dtype=complex)
    if atom.shape != (2,) or field.ndim != 1 or field.size > space.dim_field:
        raise InputValidationError(
            code=ErrorCode.INVALID_INITIAL_STATE,
            params={"atom_size": int(atom.size), "field_size": int(field.size), "n_max": space.n_max},
            message=f"Need 2 atom amplitudes and at most {space.dim_field} field amplitudes"
        )
    field = np.pad(field, (0, space.dim_field - field.size))
    psi = np.kron(atom, field)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InputValidationError(
            code=ErrorCode.INVALID_INITIAL_STATE,
            params={"n_max": space.n_max},
            message="Product state has zero norm"
        )
    psi = psi / norm
    return DensityMatrix(space, np.outer(psi, psi.conj()))


def atomic_gibbs(n_t: float) -> np.ndarray:
    """(P(g), P(e)) of a two-level atom in a reservoir with occupation n_t"""
    return np.array([n_t + 1.0, n_t]) / (2.0 * n_t + 1.0)


def thermal_state(space: TruncatedSpace, n_t: float,
                  atom: Optional[Union[AtomLevel, str]] = AtomLevel.GROUND) -> DensityMatrix:
    """
    Truncated Bose-Einstein field state with mean occupation n_t times an atomic state.

    atom=None puts the atom in its Gibbs state at the same reservoir occupation,
    P(e)/P(g) = n_t / (n_t + 1).
    """
    InputValidator.validate_rate('n_t', n_t)
    k = np.arange(space.dim_field, dtype=float)
    if n_t == 0:
        field = (k == 0).astype(float)
    else:
        field = (n_t / (n_t + 1.0)) ** k
    field = field / field.sum()

    if atom is None:
        atom_pops = atomic_gibbs(n_t)
    else:
        atom_pops = np.zeros(2)
        atom_pops[AtomLevel(atom).index] = 1.0

    return DensityMatrix(space, np.diag(np.kron(atom_pops, field)).astype(complex))


def initial_state(space: TruncatedSpace, spec: str, n_t: float = 0.0) -> DensityMatrix:
    """
    Parse an initial-state spec.

    Accepted forms: "g,0" or "|e,3>" (Fock product), "thermal" (thermal field
    with the atom in |g>), "thermal_gibbs" (thermal field and atom).

    Raises:
        InputValidationError: If the spec cannot be parsed or k exceeds n_max
    """
    text = str(spec).strip().lower()
    if text == 'thermal':
        return thermal_state(space, n_t)
    if text == 'thermal_gibbs':
        return thermal_state(space, n_t, atom=None)

    parts = [p.strip() for p in text.strip('|>').split(',')]
    if len(parts) != 2 or parts[0] not in ('g', 'e') or not parts[1].isdigit():
        raise InputValidationError(
            code=ErrorCode.INVALID_INITIAL_STATE,
            params={"initial_state": spec, "allowed": ["s,k", "thermal", "thermal_gibbs"]},
            message=f"Cannot parse initial state {spec!r}; use e.g. 'g,0', 'e,2' or 'thermal'"
        )
    return basis_state(space, parts[0], int(parts[1]))


def field_distribution(rho: DensityMatrix) -> np.ndarray:
    """Photon-number distribution p_k traced over the atom"""
    diag = np.real(np.diag(rho.matrix))
    return diag.reshape(2, rho.space.dim_field).sum(axis=0)


def tail_population(rho: DensityMatrix, levels: int = 2) -> float:
    """Population of the `levels` highest Fock levels"""
    return float(field_distribution(rho)[-levels:].sum())


def validate_density_matrix(rho: DensityMatrix,
                            trace_tol: float = 1e-10,
                            herm_tol: float = 1e-12,
                            eig_tol: float = 1e-8) -> None:
    """
    Check Hermiticity, unit trace and positivity to the given tolerances

    Raises:
        InvalidState: Naming the first violated invariant
    """
    herm_error = rho.hermiticity_error()
    if herm_error > herm_tol:
        raise InvalidState(
            params={"invariant": "hermiticity", "error": herm_error, "tolerance": herm_tol},
            message=f"State is not Hermitian: max|rho - rho^dag| = {herm_error:.3e}"
        )

    trace_error = abs(rho.trace() - 1.0)
    if trace_error > trace_tol:
        raise InvalidState(
            params={"invariant": "trace", "error": trace_error, "tolerance": trace_tol},
            message=f"State trace deviates from 1 by {trace_error:.3e}"
        )

    min_eig = rho.min_eigenvalue()
    if min_eig < -eig_tol:
        raise InvalidState(
            params={"invariant": "positivity", "min_eigenvalue": min_eig, "tolerance": eig_tol},
            message=f"State has negative eigenvalue {min_eig:.3e}"
        )
