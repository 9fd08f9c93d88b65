"""
RunConfig: INI file + command-line overrides, validated before any computation.
"""
import configparser
import dataclasses
import hashlib
import json
import logging
import multiprocessing
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from src.domain.error_codes import ErrorCode
from .evolution_service import ConvergenceProbe, ConvergenceSettings, IntegratorSettings, default_t_end
from .liouvillian import ModelKind, SystemParams
from .strategies.strategy_factory import StrategyFactory
from .validators.input_validator import InputValidationError, InputValidator

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / 'data' / 'default_config.ini'
WORKERS_ENV = 'OPEN_RABI_WORKERS'
PARAM_KEYS = ('omega0', 'g', 'kappa', 'gamma', 'gamma_ph', 'Gamma_ph', 'n_t')
OUTPUT_FORMATS = ('csv', 'json')


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    kind: ModelKind = ModelKind.RABI
    n_max: Optional[int] = 12
    initial_state: str = 'g,0'
    t_end: Optional[float] = None
    dt_out: float = 1.0
    window_fraction: float = 0.5
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    min_r2: float = 0.999
    steady_state_method: str = 'direct'
    steady_state_fallback: bool = True
    residual_tol: float = 1e-10
    kernel_tol: float = 1e-8
    convergence_ceiling: int = 40
    convergence_rtol: float = 1e-3
    sweep_parameter: str = 'g'
    sweep_values: Tuple[float, ...] = ()
    sweep_probe: ConvergenceProbe = ConvergenceProbe.RATE
    n_rel_tol: float = 0.05
    s_rel_tol: float = 0.15
    fail_on_bound_violation: bool = False
    output_format: str = 'csv'

    @property
    def auto_truncation(self) -> bool:
        return self.n_max is None

    def resolved_t_end(self, params: Optional[SystemParams] = None) -> float:
        return self.t_end if self.t_end is not None else default_t_end(params or self.params)

    def with_params(self, params: SystemParams) -> 'RunConfig':
        return dataclasses.replace(self, params=params)

    def convergence_settings(self, probe: ConvergenceProbe) -> ConvergenceSettings:
        return ConvergenceSettings(
            ceiling=self.convergence_ceiling,
            rtol=self.convergence_rtol,
            t_end=self.t_end if probe is ConvergenceProbe.RATE else None,
            dt_out=self.dt_out,
            window_fraction=self.window_fraction,
            min_r2=self.min_r2,
            initial_state=self.initial_state,
            steady_state_method=self.steady_state_method,
            steady_state_fallback=self.steady_state_fallback,
            integrator=self.integrator,
        )

    def canonical(self) -> Dict[str, Any]:
        """Every input that can change a computed number, in a stable order"""
        return {
            'params': {key: getattr(self.params, key) for key in PARAM_KEYS},
            'kind': self.kind.value,
            'n_max': 'auto' if self.n_max is None else self.n_max,
            'initial_state': self.initial_state,
            't_end': 'auto' if self.t_end is None else self.t_end,
            'dt_out': self.dt_out,
            'window_fraction': self.window_fraction,
            'rtol': self.integrator.rtol,
            'atol': self.integrator.atol,
            'tail_threshold': self.integrator.tail_threshold,
            'min_r2': self.min_r2,
            'steady_state_method': self.steady_state_method,
            'steady_state_fallback': self.steady_state_fallback,
            'residual_tol': self.residual_tol,
            'kernel_tol': self.kernel_tol,
            'convergence_ceiling': self.convergence_ceiling,
            'convergence_rtol': self.convergence_rtol,
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(';', '#'), interpolation=None)
    parser.optionxform = str
    return parser


def _read_defaults() -> configparser.ConfigParser:
    parser = _new_parser()
    with open(DEFAULT_CONFIG_PATH, encoding='utf-8') as handle:
        parser.read_file(handle)
    return parser


def _read_user_file(path: str) -> configparser.ConfigParser:
    if not os.path.isfile(path):
        raise InputValidationError(
            code=ErrorCode.CONFIG_NOT_FOUND,
            params={"path": path},
            message=f"Config file not found: {path}"
        )
    parser = _new_parser()
    try:
        with open(path, encoding='utf-8') as handle:
            parser.read_file(handle)
    except configparser.Error as e:
        raise InputValidationError(
            code=ErrorCode.CONFIG_PARSE_ERROR,
            params={"path": path, "reason": str(e)},
            message=f"Cannot parse config file {path}: {e}"
        )
    return parser


def _merge(defaults: configparser.ConfigParser, user: configparser.ConfigParser,
           explicit: set) -> None:
    for section in user.sections():
        if not defaults.has_section(section):
            raise InputValidationError(
                code=ErrorCode.CONFIG_UNKNOWN_KEY,
                params={"section": section, "allowed": defaults.sections()},
                message=f"Unknown config section [{section}]"
            )
        for key, value in user.items(section, raw=True):
            if not defaults.has_option(section, key):
                raise InputValidationError(
                    code=ErrorCode.CONFIG_UNKNOWN_KEY,
                    params={"section": section, "key": key,
                            "allowed": list(defaults.options(section))},
                    message=f"Unknown config key {section}.{key}"
                )
            defaults.set(section, key, value)
            explicit.add((section, key))


def _apply_override(parser: configparser.ConfigParser, override: str, explicit: set) -> None:
    if '=' not in override:
        raise InputValidationError(
            code=ErrorCode.CONFIG_PARSE_ERROR,
            params={"override": override},
            message=f"Override {override!r} must look like section.key=value"
        )
    target, value = (part.strip() for part in override.split('=', 1))

    if '.' in target:
        section, key = target.split('.', 1)
        if not parser.has_option(section, key):
            raise InputValidationError(
                code=ErrorCode.CONFIG_UNKNOWN_KEY,
                params={"override": override},
                message=f"Unknown config key {target}"
            )
    else:
        key = target
        owners = [s for s in parser.sections() if parser.has_option(s, key)]
        if len(owners) != 1:
            raise InputValidationError(
                code=ErrorCode.CONFIG_UNKNOWN_KEY,
                params={"override": override, "sections": owners},
                message=f"Key {key!r} is unknown or ambiguous; use section.key=value"
            )
        section = owners[0]

    parser.set(section, key, value)
    explicit.add((section, key))


def _invalid(section: str, key: str, value: Any, expected: str) -> InputValidationError:
    return InputValidationError(
        code=ErrorCode.CONFIG_INVALID_VALUE,
        params={"section": section, "key": key, "value": value, "expected": expected},
        message=f"{section}.{key} = {value!r} is not a valid {expected}"
    )


def _float(parser, section: str, key: str) -> float:
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise _invalid(section, key, raw, 'number')


def _int(parser, section: str, key: str) -> int:
    raw = parser.get(section, key)
    try:
        return int(raw)
    except ValueError:
        raise _invalid(section, key, raw, 'integer')


def _bool(parser, section: str, key: str) -> bool:
    raw = parser.get(section, key)
    try:
        return parser.getboolean(section, key)
    except ValueError:
        raise _invalid(section, key, raw, 'boolean')


def _auto_or(parser, section: str, key: str, cast):
    raw = parser.get(section, key).strip()
    if raw.lower() == 'auto':
        return None
    return cast(parser, section, key)


def _choice(parser, section: str, key: str, enum_cls):
    raw = parser.get(section, key).strip().lower()
    try:
        return enum_cls(raw)
    except ValueError:
        raise _invalid(section, key, raw, ' | '.join(m.value for m in enum_cls))


def _params(parser, explicit: set) -> SystemParams:
    values = {key: _float(parser, 'params', key) for key in PARAM_KEYS}
    delta_plus = parser.get('params', 'delta_plus').strip()
    if delta_plus:
        if ('params', 'omega0') in explicit:
            raise InputValidationError(
                code=ErrorCode.CONFIG_INVALID_VALUE,
                params={"keys": ["omega0", "delta_plus"]},
                message="Give either omega0 or delta_plus, not both"
            )
        values['omega0'] = _float(parser, 'params', 'delta_plus') - 1.0
    return SystemParams(**values)


def _sweep_values(parser) -> Tuple[float, ...]:
    raw = parser.get('sweep', 'values')
    try:
        return tuple(float(v) for v in raw.replace(';', ',').split(',') if v.strip())
    except ValueError:
        raise _invalid('sweep', 'values', raw, 'comma-separated list of numbers')


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Build a RunConfig from the shipped defaults, an optional INI file and overrides

    Raises:
        InputValidationError: CONFIG_* codes for file, key and value problems,
            INVALID_* codes for physically invalid parameters
    """
    parser = _read_defaults()
    explicit: set = set()
    if path:
        _merge(parser, _read_user_file(path), explicit)
    for override in overrides:
        _apply_override(parser, override, explicit)

    params = _params(parser, explicit)
    n_max = _auto_or(parser, 'model', 'n_max', _int)
    if n_max is not None:
        InputValidator.validate_truncation(n_max)

    t_end = _auto_or(parser, 'run', 't_end', _float)
    dt_out = _float(parser, 'run', 'dt_out')
    InputValidator.validate_time_grid(t_end if t_end is not None else 1.0, dt_out)
    window_fraction = _float(parser, 'run', 'window_fraction')
    InputValidator.validate_window_fraction(window_fraction)

    sweep_parameter = parser.get('sweep', 'parameter').strip()
    if sweep_parameter not in PARAM_KEYS + ('delta_plus',):
        raise _invalid('sweep', 'parameter', sweep_parameter, 'parameter name')

    output_format = parser.get('report', 'format').strip().lower()
    if output_format not in OUTPUT_FORMATS:
        raise _invalid('report', 'format', output_format, ' | '.join(OUTPUT_FORMATS))

    method = parser.get('solver', 'steady_state_method').strip().lower()
    if method not in StrategyFactory.get_available_strategies():
        raise _invalid('solver', 'steady_state_method', method,
                       ' | '.join(StrategyFactory.get_available_strategies()))

    config = RunConfig(
        params=params,
        kind=_choice(parser, 'model', 'kind', ModelKind),
        n_max=n_max,
        initial_state=parser.get('model', 'initial_state').strip(),
        t_end=t_end,
        dt_out=dt_out,
        window_fraction=window_fraction,
        integrator=IntegratorSettings(
            rtol=_float(parser, 'run', 'rtol'),
            atol=_float(parser, 'run', 'atol'),
            tail_threshold=_float(parser, 'run', 'tail_threshold'),
        ),
        min_r2=_float(parser, 'run', 'min_r2'),
        steady_state_method=method,
        steady_state_fallback=_bool(parser, 'solver', 'steady_state_fallback'),
        residual_tol=_float(parser, 'solver', 'residual_tol'),
        kernel_tol=_float(parser, 'solver', 'kernel_tol'),
        convergence_ceiling=_int(parser, 'solver', 'convergence_ceiling'),
        convergence_rtol=_float(parser, 'solver', 'convergence_rtol'),
        sweep_parameter=sweep_parameter,
        sweep_values=_sweep_values(parser),
        sweep_probe=_choice(parser, 'sweep', 'probe', ConvergenceProbe),
        n_rel_tol=_float(parser, 'report', 'n_rel_tol'),
        s_rel_tol=_float(parser, 'report', 's_rel_tol'),
        fail_on_bound_violation=_bool(parser, 'report', 'fail_on_bound_violation'),
        output_format=output_format,
    )
    logger.debug(f"Loaded config {config.config_hash()} from {path or 'defaults'}")
    return config


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    Worker count: explicit flag, then OPEN_RABI_WORKERS, then the CPU count

    Raises:
        InputValidationError: If the environment value is not a positive integer
    """
    if requested is not None:
        if requested < 1:
            raise InputValidationError(
                code=ErrorCode.CONFIG_INVALID_VALUE,
                params={"workers": requested},
                message="--workers must be at least 1"
            )
        return requested

    raw = os.getenv(WORKERS_ENV)
    if raw is None or raw.strip() == '':
        return multiprocessing.cpu_count()
    try:
        workers = int(raw)
    except ValueError:
        workers = 0
    if workers < 1:
        raise InputValidationError(
            code=ErrorCode.CONFIG_INVALID_VALUE,
            params={"variable": WORKERS_ENV, "value": raw},
            message=f"{WORKERS_ENV} must be a positive integer, got {raw!r}"
        )
    return workers
