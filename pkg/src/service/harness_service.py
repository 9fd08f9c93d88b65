"""
Commands behind the open-rabi CLI. Each returns a CommandReport holding a
result frame (one row per point) and a small summary dictionary.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.domain.error_codes import ErrorCode
from . import analytic
from .config import RunConfig
from .evaluators.prediction_evaluator import PredictionEvaluator, scaling_exponent
from .evolution_service import (
    ConvergenceProbe, asymptotic_values, evolve_with_state, records_to_frame,
    truncation_convergence,
)
from .hilbert import AtomOp, FieldOp, atom_operator, build_space, expectation, field_operator, initial_state
from .liouvillian import SystemParams, assemble
from .moments import (
    Closure, MomentState, VACUUM_CLOSURE, closure_from_records, correlator_fixed_point,
    integrate_moments,
)
from .reference_tables import TABLES, ReferenceRow, fig_points
from .steady_state_service import SteadyStateService
from .summary_service import frame_from_rows, panel_exponents, rate_row, steady_row
from .validators.input_validator import InputValidationError

logger = logging.getLogger(__name__)


@dataclass
class CommandReport:
    command: str
    frame: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def bound_violations(self) -> int:
        if 'bound_violations' not in self.frame:
            return 0
        return int(self.frame['bound_violations'].sum())


def run_map(func: Callable, tasks: Sequence, workers: int = 1) -> List:
    """Apply func to every task; results keep task order whatever the completion order"""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as executor:
        return list(executor.map(func, tasks))


def _require_pure_dephasing(params: SystemParams, command: str) -> None:
    if params.has_energy_damping:
        raise InputValidationError(
            code=ErrorCode.INVALID_REGIME,
            params={"command": command, "kappa": params.kappa, "gamma": params.gamma},
            message=f"{command} needs kappa = gamma = 0 (pure dephasing); use steady for damped systems"
        )


def _resolve_n_max(config: RunConfig, params: SystemParams, probe: ConvergenceProbe) -> int:
    if not config.auto_truncation:
        return config.n_max
    result = truncation_convergence(params, config.kind, probe, config.convergence_settings(probe))
    return result.n_max


# Workers take one picklable tuple each (process pool map)

def steady_point(task: Tuple[RunConfig, SystemParams, Optional[ReferenceRow]]) -> Dict[str, Any]:
    config, params, reference = task
    n_max = _resolve_n_max(config, params, ConvergenceProbe.STEADY_STATE)
    space = build_space(n_max)
    gen = assemble(params, space, config.kind)
    result = SteadyStateService(gen, method=config.steady_state_method,
                                fallback=config.steady_state_fallback,
                                residual_tol=config.residual_tol,
                                kernel_tol=config.kernel_tol).solve()

    mean_n = expectation(result.state, field_operator(space, FieldOp.N)).real
    mean_sz = expectation(result.state, atom_operator(space, AtomOp.SIGMA_Z)).real
    evaluator = PredictionEvaluator(config.n_rel_tol, config.s_rel_tol)
    return steady_row(config, params, mean_n, mean_sz, n_max, result.residual,
                      result.method_used, analytic.predict(params), evaluator, reference)


def rate_point(task: Tuple[RunConfig, SystemParams, Optional[str], Optional[float]]) -> Dict[str, Any]:
    config, params, panel, value = task
    n_max = _resolve_n_max(config, params, ConvergenceProbe.RATE)
    space = build_space(n_max)
    gen = assemble(params, space, config.kind)
    rho0 = initial_state(space, config.initial_state, params.n_t)
    run = evolve_with_state(rho0, gen, config.resolved_t_end(params), config.dt_out, config.integrator)
    values = asymptotic_values(run.records, config.window_fraction, config.min_r2)

    evaluator = PredictionEvaluator(config.n_rel_tol, config.s_rel_tol)
    return rate_row(config, params, values.rate, values.zeta_a, values.alpha_a,
                    analytic.predict(params).ndot_a, n_max, evaluator, panel, value)


def _point_params(config: RunConfig, parameter: str, value: float) -> SystemParams:
    return config.params.with_updates(**{parameter: value})


def cmd_rate(config: RunConfig, workers: int = 1, sweep: bool = False) -> CommandReport:
    """
    Late-time photon rate from the full master equation beside the closed-form rate

    With sweep=True the [sweep] parameter (g, gamma_ph or delta_plus) is varied.
    """
    _require_pure_dephasing(config.params, 'rate')
    if sweep:
        tasks = [(config, _point_params(config, config.sweep_parameter, v), config.sweep_parameter, v)
                 for v in config.sweep_values]
    else:
        tasks = [(config, config.params, None, None)]

    logger.info(f"rate: {len(tasks)} point(s)")
    frame = frame_from_rows(run_map(rate_point, tasks, workers))
    summary = {
        'points': len(frame),
        'ratio_min': float(frame['ratio'].min()),
        'ratio_max': float(frame['ratio'].max()),
        'min_linearity_r2': float(frame['linearity_r2'].min()),
    }
    if sweep:
        summary['exponent'] = scaling_exponent(frame['value'], frame['slope'])
        summary['analytic_exponent'] = scaling_exponent(frame['value'], frame['ndot_a'])
    else:
        summary.update({'slope': float(frame['slope'].iloc[0]), 'ndot_a': float(frame['ndot_a'].iloc[0])})
    return CommandReport('rate', frame, summary)


def cmd_steady(config: RunConfig, workers: int = 1) -> CommandReport:
    """Stationary N and S beside the closed-form stationary values and bounds"""
    frame = frame_from_rows(run_map(steady_point, [(config, config.params, None)], workers))
    row = frame.iloc[0]
    summary = {
        'N': float(row['N']),
        'S': float(row['S']),
        'n_lower': float(row['n_lower']),
        'n_upper': float(row['n_upper']),
        's_lower': float(row['s_lower']),
        's_upper': float(row['s_upper']),
        'bound_violations': int(row['bound_violations']),
        'residual': float(row['residual']),
        'n_max': int(row['n_max']),
    }
    return CommandReport('steady', frame, summary)


def cmd_table(config: RunConfig, which: int, workers: int = 1) -> CommandReport:
    """Every row of a published stationary-state table, recomputed beside the printed values"""
    if which not in TABLES:
        raise InputValidationError(
            code=ErrorCode.CONFIG_INVALID_VALUE,
            params={"table": which, "allowed": sorted(TABLES)},
            message=f"Unknown table {which}"
        )
    reference_rows = TABLES[which]()
    tasks = [(config, row.params, row) for row in reference_rows]
    logger.info(f"table {which}: {len(tasks)} rows")

    frame = frame_from_rows(run_map(steady_point, tasks, workers))
    frame.insert(0, 'row', np.arange(1, len(frame) + 1))
    summary = {
        'table': which,
        'rows': len(frame),
        'max_n_rel_dev': float(frame['n_rel_dev'].max()),
        'max_s_rel_dev': float(frame['s_rel_dev'].max()),
        'n_within_tol': int(frame['n_within_tol'].sum()),
        's_within_tol': int(frame['s_within_tol'].sum()),
        'bound_violations': int(frame['bound_violations'].sum()),
    }
    return CommandReport(f'table{which}', frame, summary)


FIG_ONE_COLUMNS = ('panel', 'value', 'g', 'gamma_ph', 'delta_plus', 'zeta_a', 'alpha_a',
                   'linearity_r2', 'config_hash', 'n_max', 'residual')
FIG_TWO_COLUMNS = ('panel', 'value', 'g', 'gamma_ph', 'delta_plus', 'slope', 'ndot_a', 'ratio',
                   'ratio_ok', 'linearity_r2', 'config_hash', 'n_max', 'residual')


def cmd_fig(config: RunConfig, which: int, workers: int = 1) -> CommandReport:
    """Three-panel pure-dephasing sweep data (closure values for 1, photon rates for 2)"""
    if which not in (1, 2):
        raise InputValidationError(
            code=ErrorCode.CONFIG_INVALID_VALUE,
            params={"fig": which, "allowed": [1, 2]},
            message=f"Unknown figure {which}"
        )
    tasks = [(config, params, panel, value) for panel, value, params in fig_points()]
    logger.info(f"fig {which}: {len(tasks)} points")
    full = frame_from_rows(run_map(rate_point, tasks, workers))

    if which == 1:
        frame = full[list(FIG_ONE_COLUMNS)].copy()
        summary = {
            'zeta_min': float(frame['zeta_a'].min()),
            'zeta_max': float(frame['zeta_a'].max()),
            'alpha_abs_max': float(frame['alpha_a'].abs().max()),
        }
    else:
        frame = full[list(FIG_TWO_COLUMNS)].copy()
        summary = {
            'ratio_min': float(frame['ratio'].min()),
            'ratio_max': float(frame['ratio'].max()),
            'exponents': panel_exponents(frame, 'slope'),
            'analytic_exponents': panel_exponents(frame, 'ndot_a'),
        }
    return CommandReport(f'fig{which}', frame, summary)


def cmd_evolve(config: RunConfig) -> CommandReport:
    """Raw observable trace of one run"""
    params = config.params
    n_max = _resolve_n_max(config, params, ConvergenceProbe.RATE)
    space = build_space(n_max)
    gen = assemble(params, space, config.kind)
    rho0 = initial_state(space, config.initial_state, params.n_t)
    t_end = config.resolved_t_end(params)
    run = evolve_with_state(rho0, gen, t_end, config.dt_out, config.integrator)

    frame = records_to_frame(run.records)
    frame['config_hash'] = config.config_hash()
    frame['n_max'] = n_max
    summary = {
        't_end': float(t_end),
        'records': len(frame),
        'final_mean_n': float(frame['mean_n'].iloc[-1]),
        'final_mean_sz': float(frame['mean_sz'].iloc[-1]),
        'max_trace_drift': float((frame['trace'] - 1.0).abs().max()),
        'max_tail_pop': float(frame['tail_pop'].max()),
        'nfev': run.stats['nfev'],
    }
    return CommandReport('evolve', frame, summary)


def cmd_sweep(config: RunConfig, workers: int = 1) -> CommandReport:
    """One-parameter sweep over any [params] key with a steady-state or rate probe"""
    parameter = config.sweep_parameter
    points = [(v, _point_params(config, parameter, v)) for v in config.sweep_values]
    if not points:
        raise InputValidationError(
            code=ErrorCode.CONFIG_INVALID_VALUE,
            params={"section": "sweep", "key": "values"},
            message="[sweep] values is empty"
        )

    if config.sweep_probe is ConvergenceProbe.RATE:
        rows = run_map(rate_point, [(config, p, parameter, v) for v, p in points], workers)
        y_column = 'slope'
    else:
        rows = run_map(steady_point, [(config, p, None) for _, p in points], workers)
        for row, (v, _) in zip(rows, points):
            row['panel'], row['value'] = parameter, v
        y_column = 'N'

    frame = frame_from_rows(rows)
    summary = {
        'parameter': parameter,
        'probe': config.sweep_probe.value,
        'points': len(frame),
        'exponent': scaling_exponent(frame['value'], frame[y_column]),
    }
    return CommandReport('sweep', frame, summary)


def _late_slope(times: np.ndarray, values: np.ndarray, window_fraction: float) -> float:
    start = times[-1] - window_fraction * (times[-1] - times[0])
    mask = times >= start
    slope, _ = np.polyfit(times[mask], values[mask], 1)
    return float(slope)


def _closed_rate(params: SystemParams, closure: Closure) -> float:
    """Late-time d<n>/dt of the closed moment system at its correlator fixed point"""
    p_sx, _, _, _ = correlator_fixed_point(params, closure)
    return -math.sqrt(2.0) * params.g * p_sx


def cmd_closure(config: RunConfig) -> CommandReport:
    """
    Photon rate of the full master equation against the closed moment system with
    the vacuum closure, the measured late-time closure and the measured closure history
    """
    params = config.params
    _require_pure_dephasing(params, 'closure')
    n_max = _resolve_n_max(config, params, ConvergenceProbe.RATE)
    space = build_space(n_max)
    gen = assemble(params, space, config.kind)
    t_end = config.resolved_t_end(params)
    started = time.time()
    run = evolve_with_state(initial_state(space, config.initial_state, params.n_t), gen,
                            t_end, config.dt_out, config.integrator)
    values = asymptotic_values(run.records, config.window_fraction, config.min_r2)

    measured = Closure(zeta=values.zeta_a, alpha=values.alpha_a)
    trajectory = integrate_moments(MomentState.from_record(run.records[0]), params,
                                   closure_from_records(run.records, time_dependent=True),
                                   t_end=t_end, dt_out=config.dt_out)
    rate_dynamic = _late_slope(trajectory.times, trajectory.values[:, 0], config.window_fraction)

    slope = values.rate.slope
    rates = {
        'rate_full': slope,
        'rate_closed_vacuum': _closed_rate(params, VACUUM_CLOSURE),
        'rate_closed_measured': _closed_rate(params, measured),
        'rate_closed_dynamic': rate_dynamic,
        'ndot_a': analytic.predict(params).ndot_a,
    }
    row = {'g': params.g, 'gamma_ph': params.gamma_ph, 'delta_plus': params.delta_plus,
           'zeta_a': values.zeta_a, 'alpha_a': values.alpha_a}
    row.update(rates)
    row.update({f'{name}_ratio': rate / slope if slope else math.nan
                for name, rate in rates.items() if name != 'rate_full'})
    row.update({'config_hash': config.config_hash(), 'n_max': n_max,
                'residual': values.rate.residual_rms})
    logger.info(f"closure experiment finished in {time.time() - started:.2f}s")

    frame = frame_from_rows([row])
    summary = {k: float(v) for k, v in rates.items()}
    summary.update({'zeta_a': values.zeta_a, 'alpha_a': values.alpha_a})
    return CommandReport('closure', frame, summary)
