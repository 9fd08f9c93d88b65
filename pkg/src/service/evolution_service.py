"""
Time evolution of the master equation with observable tracing, asymptotic
rate extraction and truncation convergence.
"""
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from src.domain.dto import ObservableRecord, RateEstimate
from src.domain.error_codes import ErrorCode
from .analytic import chi
from .errors import (
    DimensionMismatch, InvalidState, NoConvergence, NonlinearTail,
    TailOverflow, ToleranceFailure, WindowTooShort,
)
from .hilbert import (
    AtomOp, DensityMatrix, FieldOp, Operator, TruncatedSpace,
    atom_operator, build_space, expectation, field_operator,
    initial_state, tail_population, validate_density_matrix,
)
from .liouvillian import ModelKind, Superoperator, SystemParams, assemble, unvec, vec
from .steady_state_service import SteadyStateService
from .validators.input_validator import InputValidationError, InputValidator

logger = logging.getLogger(__name__)

RECORD_COLUMNS = tuple(f.name for f in fields(ObservableRecord))
MIN_WINDOW_RECORDS = 10


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-9
    atol: float = 1e-12
    method: str = 'RK45'
    tail_threshold: float = 1e-6
    trace_tol: float = 1e-8
    herm_tol: float = 1e-10
    eig_tol: float = 1e-8

    def halved(self) -> 'IntegratorSettings':
        return replace(self, rtol=self.rtol / 2.0, atol=self.atol / 2.0)


@dataclass
class EvolutionResult:
    records: List[ObservableRecord]
    final_state: DensityMatrix
    stats: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class AsymptoticValues:
    zeta_a: float
    alpha_a: float
    rate: RateEstimate


def time_grid(t_end: float, dt_out: float) -> np.ndarray:
    """0, dt_out, 2 dt_out, ... with t_end appended when it is not on the grid"""
    InputValidator.validate_time_grid(t_end, dt_out)
    count = int(math.floor(t_end / dt_out + 1e-9))
    grid = dt_out * np.arange(count + 1, dtype=float)
    if t_end - grid[-1] > 1e-9 * t_end:
        grid = np.append(grid, t_end)
    return grid


def default_t_end(params: SystemParams, factor: float = 30.0) -> float:
    """Horizon factor / chi over which the correlators have relaxed"""
    c = chi(params)
    if c <= 0:
        raise InputValidationError(
            code=ErrorCode.INVALID_TIME_GRID,
            params={"t_end": "auto", "chi": c},
            message="t_end = auto needs chi > 0; set [run] t_end explicitly"
        )
    return factor / c


@lru_cache(maxsize=16)
def observable_operators(space: TruncatedSpace) -> Dict[str, Operator]:
    """Operators behind every ObservableRecord column, keyed by column name"""
    x = field_operator(space, FieldOp.X)
    p = field_operator(space, FieldOp.P)
    sigma_x = atom_operator(space, AtomOp.SIGMA_X)
    sigma_y = atom_operator(space, AtomOp.SIGMA_Y)
    sigma_z = atom_operator(space, AtomOp.SIGMA_Z)
    return {
        'mean_n': field_operator(space, FieldOp.N),
        'mean_sz': sigma_z,
        'zeta': 2.0 * (x @ x @ sigma_z),
        'alpha': (x @ p + p @ x) @ sigma_z,
        'p_sx': p @ sigma_x,
        'x_sx': x @ sigma_x,
        'p_sy': p @ sigma_y,
        'x_sy': x @ sigma_y,
    }


def observables(rho: DensityMatrix, t: float = 0.0) -> ObservableRecord:
    """Measure every traced observable on one state"""
    values = {name: expectation(rho, op).real for name, op in observable_operators(rho.space).items()}
    return ObservableRecord(
        t=float(t),
        trace=rho.trace().real,
        tail_pop=tail_population(rho),
        **values
    )


def records_to_frame(records: Sequence[ObservableRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in records], columns=list(RECORD_COLUMNS))


def evolve_with_state(rho0: DensityMatrix, gen: Superoperator, t_end: float,
                      dt_out: float = 1.0,
                      settings: Optional[IntegratorSettings] = None) -> EvolutionResult:
    """
    Integrate d(rho)/dt = L(rho) and record observables on the output grid

    Raises:
        InvalidState: If rho0 is not a valid density matrix
        TailOverflow: If the top Fock levels collect more than tail_threshold
        ToleranceFailure: If step control fails or a recorded state breaks its invariants
    """
    settings = settings or IntegratorSettings()
    if rho0.space != gen.space:
        raise DimensionMismatch(
            params={"state_n_max": rho0.space.n_max, "generator_n_max": gen.space.n_max},
            message="Initial state and generator live on different truncated spaces"
        )
    validate_density_matrix(rho0)
    times = time_grid(t_end, dt_out)
    dim = gen.space.dim_total

    logger.info(f"Evolving to t={times[-1]:g} with n_max={gen.space.n_max}, "
                f"rtol={settings.rtol:g}, atol={settings.atol:g}")
    start_time = time.time()

    solution = solve_ivp(lambda t, y: gen.apply_vec(y), (0.0, float(times[-1])), vec(rho0.matrix),
                         method=settings.method, t_eval=times,
                         rtol=settings.rtol, atol=settings.atol)
    if not solution.success:
        raise ToleranceFailure(
            params={"status": int(solution.status), "solver_message": solution.message,
                    "rtol": settings.rtol, "atol": settings.atol},
            message=f"Integrator could not meet its local error target: {solution.message}"
        )

    records = []
    state = rho0
    for k, t in enumerate(solution.t):
        state = DensityMatrix(gen.space, unvec(solution.y[:, k], dim))
        try:
            validate_density_matrix(state, trace_tol=settings.trace_tol,
                                    herm_tol=settings.herm_tol, eig_tol=settings.eig_tol)
        except InvalidState as e:
            raise ToleranceFailure(params={"t": float(t), **e.params},
                                   message=f"State at t={t:g} drifted: {e.message}")

        record = observables(state, t)
        if record.tail_pop > settings.tail_threshold:
            raise TailOverflow(
                params={"t": float(t), "tail_pop": record.tail_pop,
                        "threshold": settings.tail_threshold, "n_max": gen.space.n_max},
                message=f"Top Fock levels hold {record.tail_pop:.2e} at t={t:g}; increase n_max"
            )
        records.append(record)

    wall_time = time.time() - start_time
    logger.info(f"Evolution finished in {wall_time:.2f}s ({solution.nfev} RHS evaluations)")
    stats = {
        'nfev': int(solution.nfev),
        'status': int(solution.status),
        'message': solution.message,
        'wall_time': wall_time,
        'n_max': gen.space.n_max,
    }
    return EvolutionResult(records, state, stats)


def evolve(rho0: DensityMatrix, gen: Superoperator, t_end: float, dt_out: float = 1.0,
           settings: Optional[IntegratorSettings] = None) -> List[ObservableRecord]:
    """Observable trace at t = 0, dt_out, 2 dt_out, ..."""
    return evolve_with_state(rho0, gen, t_end, dt_out, settings).records


def _window(records: Sequence[ObservableRecord], window_fraction: float):
    InputValidator.validate_window_fraction(window_fraction)
    times = np.array([r.t for r in records], dtype=float)
    if times.size < MIN_WINDOW_RECORDS:
        raise WindowTooShort(params={"records": int(times.size), "minimum": MIN_WINDOW_RECORDS},
                             message=f"Trace holds {times.size} records, need {MIN_WINDOW_RECORDS}")
    start = times[-1] - window_fraction * (times[-1] - times[0])
    mask = times >= start - 1e-12
    if mask.sum() < MIN_WINDOW_RECORDS:
        raise WindowTooShort(
            params={"records": int(mask.sum()), "minimum": MIN_WINDOW_RECORDS,
                    "window_fraction": window_fraction},
            message=f"Fit window holds {int(mask.sum())} records, need {MIN_WINDOW_RECORDS}"
        )
    return mask


def asymptotic_rate(records: Sequence[ObservableRecord], window_fraction: float = 0.5,
                    min_r2: float = 0.999) -> RateEstimate:
    """
    Least-squares line through mean_n over the last window_fraction of the trace

    A low r2 is only rejected when the fitted drift over the window exceeds the
    residual scatter, so a flat noisy tail still reports slope ~ 0.

    Raises:
        WindowTooShort: If fewer than 10 records fall in the window
        NonlinearTail: If the tail is visibly curved (transient not yet decayed)
    """
    mask = _window(records, window_fraction)
    t = np.array([r.t for r in records], dtype=float)[mask]
    y = np.array([r.mean_n for r in records], dtype=float)[mask]

    slope, intercept = np.polyfit(t, y, 1)
    residuals = y - (slope * t + intercept)
    residual_rms = float(np.sqrt(np.mean(residuals ** 2)))
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))

    span = float(t[-1] - t[0])
    if r2 < min_r2 and abs(slope) * span > residual_rms:
        raise NonlinearTail(
            params={"linearity_r2": r2, "min_r2": min_r2, "fit_start": float(t[0]), "fit_end": float(t[-1])},
            message=f"Tail is not linear (r2={r2:.5f}); extend t_end"
        )

    return RateEstimate(
        slope=float(slope),
        intercept=float(intercept),
        fit_window=(float(t[0]), float(t[-1])),
        residual_rms=residual_rms,
        linearity_r2=r2,
    )


def asymptotic_values(records: Sequence[ObservableRecord], window_fraction: float = 0.5,
                      min_r2: float = 0.999) -> AsymptoticValues:
    """Window means of zeta and alpha together with the fitted photon rate"""
    mask = _window(records, window_fraction)
    zeta = np.array([r.zeta for r in records])[mask]
    alpha = np.array([r.alpha for r in records])[mask]
    return AsymptoticValues(
        zeta_a=float(zeta.mean()),
        alpha_a=float(alpha.mean()),
        rate=asymptotic_rate(records, window_fraction, min_r2),
    )


class ConvergenceProbe(str, Enum):
    STEADY_STATE = "steady_state"
    RATE = "rate"


@dataclass(frozen=True)
class ConvergenceSettings:
    start: int = 4
    step: int = 4
    ceiling: int = 40
    rtol: float = 1e-3
    atol: float = 1e-12
    tail_tol: float = 1e-10
    t_end: Optional[float] = None
    dt_out: float = 1.0
    window_fraction: float = 0.5
    min_r2: float = 0.999
    initial_state: str = 'g,0'
    steady_state_method: Optional[str] = None
    steady_state_fallback: bool = True
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)


@dataclass
class ConvergenceResult:
    n_max: int
    value: float
    tail_pop: float
    residual: float
    history: List[Dict[str, Any]] = field(default_factory=list)


def _probe(params: SystemParams, kind: ModelKind, n_max: int, probe: ConvergenceProbe,
           settings: ConvergenceSettings) -> Tuple[float, float, float]:
    """(probe value, tail population, residual) at one truncation"""
    space = build_space(n_max)
    gen = assemble(params, space, kind)

    if probe is ConvergenceProbe.STEADY_STATE:
        result = SteadyStateService(gen, method=settings.steady_state_method,
                                    fallback=settings.steady_state_fallback).solve()
        mean_n = expectation(result.state, field_operator(space, FieldOp.N)).real
        return mean_n, tail_population(result.state), result.residual

    t_end = settings.t_end or default_t_end(params)
    rho0 = initial_state(space, settings.initial_state, params.n_t)
    run = evolve_with_state(rho0, gen, t_end, settings.dt_out, settings.integrator)
    estimate = asymptotic_rate(run.records, settings.window_fraction, settings.min_r2)
    tail = max(r.tail_pop for r in run.records)
    return estimate.slope, tail, estimate.residual_rms


def truncation_convergence(params: SystemParams, kind: ModelKind = ModelKind.RABI,
                           probe: ConvergenceProbe = ConvergenceProbe.STEADY_STATE,
                           settings: Optional[ConvergenceSettings] = None) -> ConvergenceResult:
    """
    Smallest n_max on the ladder start, start + step, ... whose probe changes by
    less than rtol when moving to n_max + step, with tail population below tail_tol

    Raises:
        NoConvergence: If the ladder reaches the ceiling without converging
    """
    settings = settings or ConvergenceSettings()
    kind = ModelKind(kind)
    probe = ConvergenceProbe(probe)
    history: List[Dict[str, Any]] = []
    cache: Dict[int, Optional[Tuple[float, float, float]]] = {}

    def measure(n: int):
        if n not in cache:
            try:
                cache[n] = _probe(params, kind, n, probe, settings)
                value, tail, residual = cache[n]
                history.append({'n_max': n, 'value': value, 'tail_pop': tail, 'residual': residual})
            except TailOverflow as e:
                logger.info(f"n_max={n} overflowed ({e.message}), moving up the ladder")
                cache[n] = None
                history.append({'n_max': n, 'value': math.nan, 'tail_pop': e.params.get('tail_pop'),
                                'residual': math.nan})
        return cache[n]

    n = settings.start
    while n + settings.step <= settings.ceiling:
        current = measure(n)
        following = measure(n + settings.step)
        if current is not None and following is not None:
            value, tail, residual = current
            change = abs(following[0] - value)
            if change <= settings.rtol * abs(following[0]) + settings.atol and tail < settings.tail_tol:
                logger.info(f"Truncation converged at n_max={n} ({probe.value} = {value:.6e})")
                return ConvergenceResult(n, value, tail, residual, history)
        n += settings.step

    raise NoConvergence(
        params={"ceiling": settings.ceiling, "probe": probe.value, "history": history},
        message=f"{probe.value} did not converge below n_max={settings.ceiling}"
    )


@dataclass(frozen=True)
class ToleranceReport:
    slope: float
    slope_refined: float
    slope_change: float
    final_mean_n: float
    final_mean_n_refined: float
    mean_n_change: float


def tolerance_sensitivity(rho0: DensityMatrix, gen: Superoperator, t_end: float,
                          dt_out: float = 1.0, settings: Optional[IntegratorSettings] = None,
                          window_fraction: float = 0.5, min_r2: float = 0.999) -> ToleranceReport:
    """Repeat a run with halved tolerances and report how much the slope and final <n> move"""
    settings = settings or IntegratorSettings()
    coarse = evolve(rho0, gen, t_end, dt_out, settings)
    fine = evolve(rho0, gen, t_end, dt_out, settings.halved())
    slope = asymptotic_rate(coarse, window_fraction, min_r2).slope
    slope_refined = asymptotic_rate(fine, window_fraction, min_r2).slope
    slope_change = abs(slope_refined - slope) / abs(slope_refined) if slope_refined else abs(slope)
    return ToleranceReport(
        slope=slope,
        slope_refined=slope_refined,
        slope_change=slope_change,
        final_mean_n=coarse[-1].mean_n,
        final_mean_n_refined=fine[-1].mean_n,
        mean_n_change=abs(fine[-1].mean_n - coarse[-1].mean_n),
    )


@dataclass(frozen=True)
class RelaxationReport:
    t_end: float
    evolved_mean_n: float
    steady_mean_n: float
    difference: float


def relaxation_check(params: SystemParams, kind: ModelKind = ModelKind.RABI, n_max: int = 12,
                     initial: str = 'g,0', t_factor: float = 20.0, dt_out: float = 1.0,
                     settings: Optional[IntegratorSettings] = None) -> RelaxationReport:
    """
    Evolve to t = t_factor / min(kappa, gamma) and compare <n> with the steady state

    Raises:
        InputValidationError: If kappa or gamma is zero
    """
    if params.kappa <= 0 or params.gamma <= 0:
        raise InputValidationError(
            code=ErrorCode.INVALID_REGIME,
            params={"kappa": params.kappa, "gamma": params.gamma},
            message="Relaxation check needs kappa > 0 and gamma > 0"
        )
    space = build_space(n_max)
    gen = assemble(params, space, kind)
    t_end = t_factor / min(params.kappa, params.gamma)

    records = evolve(initial_state(space, initial, params.n_t), gen, t_end, dt_out, settings)
    rho_inf = SteadyStateService(gen).solve().state
    steady_n = expectation(rho_inf, field_operator(space, FieldOp.N)).real
    return RelaxationReport(
        t_end=t_end,
        evolved_mean_n=records[-1].mean_n,
        steady_mean_n=steady_n,
        difference=abs(records[-1].mean_n - steady_n),
    )
