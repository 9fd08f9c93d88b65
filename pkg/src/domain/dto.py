from dataclasses import dataclass, asdict, fields
from typing import Dict, Any, Tuple


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    mean_n: float
    mean_sz: float
    zeta: float
    alpha: float
    p_sx: float
    x_sx: float
    p_sy: float
    x_sy: float
    trace: float
    tail_pop: float

    @classmethod
    def from_dict(cls, data: dict):
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    intercept: float
    fit_window: Tuple[float, float]
    residual_rms: float
    linearity_r2: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'fit_start': self.fit_window[0],
            'fit_end': self.fit_window[1],
            'residual_rms': self.residual_rms,
            'linearity_r2': self.linearity_r2
        }


@dataclass(frozen=True)
class AnalyticPrediction:
    chi: float
    theta: float
    ndot_a: float
    n_inf: float
    sz_inf: float
    n_lower: float
    n_upper: float
    s_lower: float
    s_upper: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
