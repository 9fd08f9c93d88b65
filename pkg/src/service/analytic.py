"""
Closed-form predictions under the near-vacuum closure zeta = -1, alpha = 0.

All functions are pure and take a SystemParams; Delta_+ always comes from
params.delta_plus so omega = 1 is never bypassed.
"""
import logging
import math
import warnings

from src.domain.dto import AnalyticPrediction
from .errors import DivisionByZero
from .liouvillian import SystemParams

logger = logging.getLogger(__name__)


class OutOfRegimeWarning(UserWarning):
    """A formula was evaluated outside the regime it was derived for"""


def chi(params: SystemParams) -> float:
    """Correlator damping rate gamma_ph + Gamma_ph + kappa/2 + gamma(n_t + 1/2)"""
    return (params.gamma_ph + params.Gamma_ph + params.kappa / 2.0
            + params.gamma * (params.n_t + 0.5))


def theta(params: SystemParams) -> float:
    """Theta = g^2 / (Delta_+^2 + chi^2)"""
    return params.g ** 2 / (params.delta_plus ** 2 + chi(params) ** 2)


def _rate_formula(params: SystemParams) -> float:
    denominator = params.delta_plus ** 2 + params.gamma_ph ** 2
    if denominator == 0:
        return 0.0
    return 2.0 * params.gamma_ph * params.g ** 2 / denominator


def photon_rate_asymptotic(params: SystemParams) -> float:
    """
    Late-time photon creation rate 2 gamma_ph g^2 / (Delta_+^2 + gamma_ph^2).

    Derived for pure atomic dephasing; with kappa or gamma > 0 the value is
    still returned but an OutOfRegimeWarning is emitted.
    """
    if params.has_energy_damping:
        message = (f"photon_rate_asymptotic assumes kappa = gamma = 0 "
                   f"(got kappa={params.kappa}, gamma={params.gamma})")
        logger.warning(message)
        warnings.warn(message, OutOfRegimeWarning, stacklevel=2)

    return _rate_formula(params)


def _require_energy_damping(params: SystemParams) -> None:
    missing = [name for name in ('kappa', 'gamma') if getattr(params, name) == 0]
    if missing:
        raise DivisionByZero(
            params={"zero_rates": missing},
            message=f"No stationary prediction without energy damping: {', '.join(missing)} = 0"
        )


def stationary(params: SystemParams):
    """
    Stationary (n_inf, sz_inf)

    Returns:
        n_t + 2 Theta chi / kappa and -1/(2 n_t + 1) + 4 Theta chi / (gamma (n_t + 1/2))

    Raises:
        DivisionByZero: If kappa = 0 or gamma = 0
    """
    _require_energy_damping(params)
    c = chi(params)
    t = theta(params)
    n_inf = params.n_t + 2.0 * t * c / params.kappa
    sz_inf = -1.0 / (2.0 * params.n_t + 1.0) + 4.0 * t * c / (params.gamma * (params.n_t + 0.5))
    return n_inf, sz_inf


def bounds(params: SystemParams):
    """
    Lower and upper bounds (n_lower, n_upper, s_lower, s_upper) on N and S

    Raises:
        DivisionByZero: If kappa = 0 or gamma = 0
    """
    _require_energy_damping(params)
    c = chi(params)
    t = theta(params)
    return (t,
            2.0 * t * c / params.kappa,
            4.0 * t,
            4.0 * t * c / (params.gamma * (params.n_t + 0.5)))


def dn_inf_dg(params: SystemParams) -> float:
    """d n_inf / d g = 4 g chi / (kappa (Delta_+^2 + chi^2))"""
    _require_energy_damping(params)
    c = chi(params)
    return 4.0 * params.g * c / (params.kappa * (params.delta_plus ** 2 + c ** 2))


def correlator_asymptote(params: SystemParams) -> float:
    """Late-time <p sigma_x> = -<x sigma_y> ~ -sqrt(2) g gamma_ph / (Delta_+^2 + gamma_ph^2)"""
    denominator = params.delta_plus ** 2 + params.gamma_ph ** 2
    if denominator == 0:
        return 0.0
    return -math.sqrt(2.0) * params.g * params.gamma_ph / denominator


def predict(params: SystemParams) -> AnalyticPrediction:
    """
    Every closed-form quantity for one parameter set.

    Stationary values and bounds are NaN when kappa or gamma is zero; the rate
    is evaluated silently regardless of regime.
    """
    if params.kappa > 0 and params.gamma > 0:
        n_inf, sz_inf = stationary(params)
        n_lower, n_upper, s_lower, s_upper = bounds(params)
    else:
        n_inf = sz_inf = n_lower = n_upper = s_lower = s_upper = math.nan

    return AnalyticPrediction(
        chi=chi(params),
        theta=theta(params),
        ndot_a=_rate_formula(params),
        n_inf=n_inf,
        sz_inf=sz_inf,
        n_lower=n_lower,
        n_upper=n_upper,
        s_lower=s_lower,
        s_upper=s_upper,
    )
