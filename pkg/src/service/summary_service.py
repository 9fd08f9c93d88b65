import json
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.domain.dto import AnalyticPrediction, RateEstimate
from .config import RunConfig
from .evaluators.prediction_evaluator import PredictionEvaluator, scaling_exponent
from .liouvillian import SystemParams
from .reference_tables import ReferenceRow

PARAM_COLUMNS = ('omega0', 'delta_plus', 'g', 'kappa', 'gamma', 'gamma_ph', 'Gamma_ph', 'n_t')
PROVENANCE_COLUMNS = ('config_hash', 'n_max', 'residual')
FLOAT_FORMAT = '%.12e'


def params_columns(params: SystemParams) -> Dict[str, float]:
    data = params.as_dict()
    return {key: data[key] for key in PARAM_COLUMNS}


def provenance(config: RunConfig, params: SystemParams, n_max: int, residual: float) -> Dict[str, Any]:
    return {
        'config_hash': config.with_params(params).config_hash(),
        'n_max': int(n_max),
        'residual': float(residual),
    }


def steady_row(config: RunConfig, params: SystemParams, mean_n: float, mean_sz: float,
               n_max: int, residual: float, method: str, prediction: AnalyticPrediction,
               evaluator: PredictionEvaluator, reference: Optional[ReferenceRow] = None) -> Dict[str, Any]:
    """One stationary point: N and S beside the closed-form values, bounds and optional published values"""
    n = mean_n - params.n_t
    s = mean_sz + 1.0 / (2.0 * params.n_t + 1.0)
    row = params_columns(params)
    row.update({
        'mean_n': mean_n,
        'mean_sz': mean_sz,
        'N': n,
        'S': s,
        'n_inf': prediction.n_inf,
        'sz_inf': prediction.sz_inf,
        'chi': prediction.chi,
        'theta': prediction.theta,
        'n_lower': prediction.n_lower,
        'n_upper': prediction.n_upper,
        's_lower': prediction.s_lower,
        's_upper': prediction.s_upper,
        'method': method,
    })
    row.update(evaluator.evaluate_steady(n, s, prediction))
    if reference is not None:
        row.update(reference.reference_dict())
        row.update(evaluator.compare_to_reference(n, s, reference.n, reference.s))
    row.update(provenance(config, params, n_max, residual))
    return row


def rate_row(config: RunConfig, params: SystemParams, estimate: RateEstimate,
             zeta_a: float, alpha_a: float, ndot_a: float, n_max: int,
             evaluator: PredictionEvaluator, panel: Optional[str] = None,
             value: Optional[float] = None) -> Dict[str, Any]:
    """One pure-dephasing point: fitted photon rate, closure values and the closed-form rate"""
    row = {'panel': panel, 'value': value} if panel is not None else {}
    row.update(params_columns(params))
    row.update({
        'slope': estimate.slope,
        'intercept': estimate.intercept,
        'fit_start': estimate.fit_window[0],
        'fit_end': estimate.fit_window[1],
        'linearity_r2': estimate.linearity_r2,
        'zeta_a': zeta_a,
        'alpha_a': alpha_a,
        'ndot_a': ndot_a,
    })
    row.update(evaluator.evaluate_rate(estimate.slope, ndot_a))
    row.update(provenance(config, params, n_max, estimate.residual_rms))
    return row


def frame_from_rows(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows))


def panel_exponents(frame: pd.DataFrame, y_column: str = 'slope') -> Dict[str, float]:
    """log-log exponent of y_column against the swept value, per panel"""
    exponents = {}
    for panel, group in frame.groupby('panel', sort=False):
        exponents[panel] = scaling_exponent(group['value'], group[y_column])
    return exponents


def render_csv(frame: pd.DataFrame) -> str:
    """RFC-4180 CSV with a header row and 13 significant digits"""
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def _clean(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def render_json(command: str, frame: pd.DataFrame, summary: Dict[str, Any]) -> str:
    rows: List[Dict[str, Any]] = frame.to_dict(orient='records')
    payload = {'command': command, 'summary': summary, 'rows': rows}
    return json.dumps(_clean(payload), indent=2, sort_keys=False)
