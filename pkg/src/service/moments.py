"""
Closed moment equations for <n>, <sigma_z> and the four correlators
<p sigma_x>, <x sigma_x>, <p sigma_y>, <x sigma_y>.

The correlator block is linear once zeta = <2 x^2 sigma_z> and
alpha = <(xp + px) sigma_z> are fixed, so the whole system is
dy/dt = M y + b with y = [n, sz, p_sx, x_sx, p_sy, x_sy].
"""
import logging
import math
from dataclasses import dataclass, fields
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from src.domain.dto import ObservableRecord
from .analytic import chi
from .errors import SingularSystem, ToleranceFailure, WindowTooShort
from .evolution_service import time_grid
from .liouvillian import SystemParams

logger = logging.getLogger(__name__)

ClosureValue = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class MomentState:
    mean_n: float = 0.0
    mean_sz: float = -1.0
    p_sx: float = 0.0
    x_sx: float = 0.0
    p_sy: float = 0.0
    x_sy: float = 0.0

    @classmethod
    def from_vector(cls, y) -> 'MomentState':
        return cls(*(float(v) for v in np.real(np.asarray(y)).ravel()))

    @classmethod
    def from_record(cls, record: ObservableRecord) -> 'MomentState':
        return cls(**{f.name: getattr(record, f.name) for f in fields(cls)})

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    def __add__(self, other: 'MomentState') -> 'MomentState':
        return MomentState.from_vector(self.to_vector() + other.to_vector())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))


COLUMNS = tuple(f.name for f in fields(MomentState))


@dataclass(frozen=True)
class Closure:
    """Values of zeta and alpha; either constants or functions of time"""
    zeta: ClosureValue = -1.0
    alpha: ClosureValue = 0.0

    @property
    def is_constant(self) -> bool:
        return not (callable(self.zeta) or callable(self.alpha))

    def at(self, t: float) -> Tuple[float, float]:
        zeta = self.zeta(t) if callable(self.zeta) else self.zeta
        alpha = self.alpha(t) if callable(self.alpha) else self.alpha
        return float(zeta), float(alpha)


VACUUM_CLOSURE = Closure()


def moment_matrix(params: SystemParams, closure: Closure = VACUUM_CLOSURE,
                  t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    (M, b) such that dy/dt = M y + b at time t

    The correlator block has damping chi on its diagonal, rotations by omega
    and omega0, and sources -s, -s alpha, -s zeta with s = sqrt(2) g.
    """
    zeta, alpha = closure.at(t)
    s = math.sqrt(2.0) * params.g
    c = chi(params)
    w = params.omega
    w0 = params.omega0
    kappa = params.kappa
    relax_sz = 0.5 * params.gamma * (2.0 * params.n_t + 1.0)

    m = np.array([
        # n      sz         p_sx   x_sx   p_sy   x_sy
        [-kappa, 0.0,       -s,    0.0,   0.0,   0.0],
        [0.0,    -relax_sz, 0.0,   0.0,   0.0,   2.0 * s],
        [0.0,    0.0,       -c,    -w,    -w0,   0.0],
        [0.0,    0.0,       w,     -c,    0.0,   -w0],
        [0.0,    0.0,       w0,    0.0,   -c,    -w],
        [0.0,    0.0,       0.0,   w0,    w,     -c],
    ])
    b = np.array([
        kappa * params.n_t,
        -0.5 * params.gamma,
        -s,
        0.0,
        -s * alpha,
        -s * zeta,
    ])
    return m, b


def moment_rhs(state: MomentState, params: SystemParams,
               closure: Closure = VACUUM_CLOSURE, t: float = 0.0) -> MomentState:
    """Time derivative of every moment"""
    m, b = moment_matrix(params, closure, t)
    return MomentState.from_vector(m @ state.to_vector() + b)


def correlator_fixed_point(params: SystemParams,
                           closure: Closure = VACUUM_CLOSURE) -> Tuple[float, float, float, float]:
    """
    Stationary (p_sx, x_sx, p_sy, x_sy) of the correlator block

    Raises:
        SingularSystem: If chi = 0 (undamped rotation has no fixed point)
    """
    if not closure.is_constant:
        raise SingularSystem(params={"closure": "time-dependent"},
                             message="A fixed point needs constant closure values")
    c = chi(params)
    if c <= 0:
        raise SingularSystem(
            params={"chi": c},
            message="Correlator block is undamped (chi = 0), no fixed point exists"
        )
    m, b = moment_matrix(params, closure)
    block = m[2:, 2:]
    solution = np.linalg.solve(block, -b[2:])
    residual = float(np.max(np.abs(block @ solution + b[2:])))
    logger.debug(f"Correlator fixed point {solution} with residual {residual:.2e}")
    return tuple(float(v) for v in solution)


def moment_stationary(params: SystemParams, closure: Closure = VACUUM_CLOSURE) -> MomentState:
    """
    Full stationary moment vector

    Raises:
        SingularSystem: If kappa, gamma or chi vanish
    """
    if params.kappa <= 0 or params.gamma <= 0:
        raise SingularSystem(
            params={"kappa": params.kappa, "gamma": params.gamma},
            message="<n> and <sigma_z> have no fixed point without kappa and gamma"
        )
    p_sx, x_sx, p_sy, x_sy = correlator_fixed_point(params, closure)
    m, b = moment_matrix(params, closure)
    mean_n = params.n_t - math.sqrt(2.0) * params.g * p_sx / params.kappa
    mean_sz = (b[1] + m[1, 5] * x_sy) / -m[1, 1]
    return MomentState(mean_n, mean_sz, p_sx, x_sx, p_sy, x_sy)


@dataclass(frozen=True)
class MomentTrajectory:
    times: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> MomentState:
        return MomentState.from_vector(self.values[-1])

    def states(self) -> Iterable[MomentState]:
        return (MomentState.from_vector(row) for row in self.values)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=list(COLUMNS))
        frame.insert(0, 't', self.times)
        return frame


def integrate_moments(initial: MomentState, params: SystemParams,
                      closure: Closure = VACUUM_CLOSURE, t_end: float = 100.0,
                      dt_out: float = 1.0, rtol: float = 1e-10,
                      atol: float = 1e-13) -> MomentTrajectory:
    """
    Integrate the six moment equations with an 8th-order Runge-Kutta pair

    Raises:
        ToleranceFailure: If the integrator stops early
    """
    times = time_grid(t_end, dt_out)
    if closure.is_constant:
        m, b = moment_matrix(params, closure)

        def rhs(t, y):
            return m @ y + b
    else:
        def rhs(t, y):
            m_t, b_t = moment_matrix(params, closure, t)
            return m_t @ y + b_t

    solution = solve_ivp(rhs, (0.0, float(times[-1])), initial.to_vector(),
                         method='DOP853', t_eval=times, rtol=rtol, atol=atol)
    if not solution.success:
        raise ToleranceFailure(
            params={"status": int(solution.status), "t_reached": float(solution.t[-1]) if solution.t.size else 0.0},
            message=f"Moment integration failed: {solution.message}"
        )
    return MomentTrajectory(solution.t, solution.y.T.copy())


def propagate_exact(initial: MomentState, params: SystemParams,
                    closure: Closure = VACUUM_CLOSURE,
                    times: Optional[Sequence[float]] = None) -> MomentTrajectory:
    """
    Matrix-exponential solution through the augmented generator [[M, b], [0, 0]]
    """
    if not closure.is_constant:
        raise SingularSystem(params={"closure": "time-dependent"},
                             message="Exact propagation needs constant closure values")
    times = np.asarray([0.0] if times is None else times, dtype=float)
    m, b = moment_matrix(params, closure)
    augmented = np.zeros((7, 7))
    augmented[:6, :6] = m
    augmented[:6, 6] = b
    start = np.append(initial.to_vector(), 1.0)
    values = np.array([(expm(augmented * t) @ start)[:6] for t in times])
    return MomentTrajectory(times, values)


def closure_from_records(records: Sequence[ObservableRecord], window_fraction: float = 0.5,
                         time_dependent: bool = False) -> Closure:
    """
    Closure measured from a master-equation run

    By default the late-window means of zeta and alpha; with time_dependent=True
    the recorded series are linearly interpolated.

    Raises:
        WindowTooShort: If the window holds fewer than two records
    """
    if len(records) < 2:
        raise WindowTooShort(params={"records": len(records), "minimum": 2},
                             message="Need at least two records to measure a closure")
    times = np.array([r.t for r in records])
    zeta = np.array([r.zeta for r in records])
    alpha = np.array([r.alpha for r in records])

    if time_dependent:
        return Closure(zeta=lambda t: float(np.interp(t, times, zeta)),
                       alpha=lambda t: float(np.interp(t, times, alpha)))

    start = times[-1] - window_fraction * (times[-1] - times[0])
    mask = times >= start
    if mask.sum() < 2:
        raise WindowTooShort(params={"records": int(mask.sum()), "minimum": 2},
                             message="Closure window holds fewer than two records")
    return Closure(zeta=float(zeta[mask].mean()), alpha=float(alpha[mask].mean()))
