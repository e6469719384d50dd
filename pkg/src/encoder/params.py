import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.errors import ParameterError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


class VbtMode(str, Enum):
    """Bias/threshold law family of the variable-bias, variable-threshold encoder."""
    UNSHIFTED = "unshifted"
    SHIFTED = "shifted"
    REGULARIZED = "regularized"


class Regime(str, Enum):
    """Parameter regime used on one interval."""
    FIXED = "fixed"
    HIGH = "high"
    LOW = "low"


class ConventionalParams(BaseModel):
    """Constant bias b and threshold Delta of the conventional integrate-and-fire encoder."""
    model_config = ConfigDict(frozen=True)

    bias: float = Field(gt=0, allow_inf_nan=False)
    threshold: float = Field(gt=0, allow_inf_nan=False)


class VbtParams(BaseModel):
    """
    Energy-driven bias and threshold parameters.

    Args:
        alpha: Contraction parameter in (0, 1)
        beta: Threshold energy weight, > 0
        shift: Constant s added to the signal (0 for the unshifted mode)
        c: Amplitude bound of the target signal
        gamma1: Bias regularizer (regularized mode only)
        gamma2: Threshold regularizer (regularized mode only)
    """
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0, lt=1)
    beta: float = Field(gt=0, allow_inf_nan=False)
    shift: float = Field(default=0.0, allow_inf_nan=False)
    c: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    gamma1: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    gamma2: float = Field(default=0.0, ge=0, allow_inf_nan=False)

    def check_mode(self, mode: VbtMode) -> None:
        """Raise ParameterError unless the parameters suit the mode."""
        if mode == VbtMode.SHIFTED and self.shift <= self.c:
            raise ParameterError(f"shifted mode requires s > c, got s={self.shift}, c={self.c}")
        if mode == VbtMode.REGULARIZED and (self.gamma1 <= 0 or self.gamma2 <= 0):
            raise ParameterError("regularized mode requires gamma1 > 0 and gamma2 > 0")
        if mode == VbtMode.UNSHIFTED and self.shift != 0.0:
            raise ParameterError(f"unshifted mode requires s = 0, got s={self.shift}")

    def effective(self, mode: VbtMode) -> "VbtParams":
        """Parameters with the regularizers zeroed outside regularized mode."""
        if mode == VbtMode.REGULARIZED:
            return self
        return self.model_copy(update={"gamma1": 0.0, "gamma2": 0.0})


class AdaptiveParams(BaseModel):
    """
    Two-level adaptive parameters: (alpha, beta) switch on |f f'| at each firing.

    The high-variation pair must have the smaller alpha and the larger beta.
    Both pairs share the shift and amplitude bound.
    """
    model_config = ConfigDict(frozen=True)

    high: VbtParams
    low: VbtParams
    delta_switch: float = Field(ge=0)

    @model_validator(mode="after")
    def _check_pairs(self) -> "AdaptiveParams":
        if not (self.high.alpha < self.low.alpha and self.high.beta > self.low.beta):
            raise ValueError("adaptive pairs need alpha_high < alpha_low and beta_high > beta_low")
        if self.high.shift != self.low.shift or self.high.c != self.low.c:
            raise ValueError("adaptive pairs must share shift and c")
        return self

    @classmethod
    def from_pairs(cls, alpha_high: float, beta_high: float, alpha_low: float, beta_low: float,
                   delta_switch: float, shift: float, c: float = 1.0) -> "AdaptiveParams":
        try:
            return cls(
                high=VbtParams(alpha=alpha_high, beta=beta_high, shift=shift, c=c),
                low=VbtParams(alpha=alpha_low, beta=beta_low, shift=shift, c=c),
                delta_switch=delta_switch,
            )
        except ValidationError as e:
            raise ParameterError(str(e)) from e


class EncodingMetadata(BaseModel):
    """Provenance of an Encoding."""
    model_config = ConfigDict(frozen=True)

    scheme: str
    params: Dict[str, Any] = Field(default_factory=dict)
    signal_id: str
    signal_name: str = "signal"
    omega0: float
    shift: float = 0.0
    t0: float
    window: Tuple[float, float]
    grid_oversample: int = 64
    discarded_tail: float = Field(default=0.0, ge=0, description="Length of the uncrossed final interval in seconds")
    warnings: List[str] = Field(default_factory=list)
    t0_pinned: bool = True
    floored_intervals: List[int] = Field(default_factory=list,
                                         description="Intervals held to the minimum firing step")


class Encoding(BaseModel):
    """
    Firing instants, signal averages and per-interval diagnostics.

    Interval n runs from firings[n] to firings[n + 1] and pairs with averages[n].
    thresholds[n] is the threshold value at the firing that closed the interval
    and bias_integrals[n] is the integral of the bias over the interval.
    """
    model_config = ConfigDict(frozen=True)

    firings: List[float]
    averages: List[float]
    energies: List[float]
    derivative_energies: List[float]
    thresholds: List[float]
    bias_integrals: List[float]
    regimes: List[Regime]
    metadata: EncodingMetadata

    @model_validator(mode="after")
    def _check_shape(self) -> "Encoding":
        n = len(self.firings) - 1
        if n < 0:
            raise ValueError("an encoding needs at least the initial firing")
        for name in ("averages", "energies", "derivative_energies", "thresholds", "bias_integrals", "regimes"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if n and not np.all(np.diff(self.firings) > 0):
            raise ValueError("firing instants must be strictly increasing")
        return self

    @property
    def sample_count(self) -> int:
        """#S: firing instants excluding the pinned initial instant."""
        return len(self.firings) - 1

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.firings, dtype=float)

    @property
    def intervals(self) -> np.ndarray:
        """T_n = t_{n+1} - t_n."""
        return np.diff(self.times)

    @property
    def midpoints(self) -> np.ndarray:
        """s_n = (t_n + t_{n+1}) / 2."""
        t = self.times
        return (t[:-1] + t[1:]) / 2.0

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.averages, dtype=float)

    @property
    def shift(self) -> float:
        return self.metadata.shift

    def shifted_averages(self) -> np.ndarray:
        """Averages of f + s: y_n + s T_n."""
        return self.y + self.shift * self.intervals

    def interval_params(self, n: int) -> Optional[VbtParams]:
        """VbtParams in force on interval n, or None for non-VBT schemes."""
        params = self.metadata.params
        if "alpha" in params:
            return VbtParams(**params)
        if "high" in params:
            key = "high" if self.regimes[n] == Regime.HIGH else "low"
            return VbtParams(**params[key])
        return None

    def alpha(self) -> Optional[float]:
        """Largest alpha used by the encoding (the contraction parameter)."""
        params = self.metadata.params
        if "alpha" in params:
            return float(params["alpha"])
        if "high" in params:
            return float(max(params["high"]["alpha"], params["low"]["alpha"]))
        return None

    def with_averages(self, averages) -> "Encoding":
        """Same firing set with replaced averages."""
        return self.model_copy(update={"averages": [float(v) for v in averages]})
