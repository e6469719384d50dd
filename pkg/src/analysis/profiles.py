import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from src.encoder.params import Encoding, VbtParams
from src.errors import ParameterError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

DENSITY_LABEL = "windowed approximation of the lower Beurling density"


class FiringRateProfile(BaseModel):
    """Firing rate 1/T_n at each interval midpoint."""
    midpoints: List[float]
    rates: List[float]
    nyquist_rate: float
    sub_nyquist_fraction: float


class DensityEstimate(BaseModel):
    """Minimum firing density over sliding windows of fixed length."""
    window_len: float
    min_density: float
    nyquist_rate: float
    label: str = DENSITY_LABEL


def interval_bounds(params: VbtParams, omega0: float) -> Tuple[float, float]:
    """
    Largest firing intervals allowed in slowly and rapidly varying regions.

    Args:
        params: alpha, beta, shift s and amplitude bound c
        omega0: Band limit in rad/s

    Returns:
        (t_low_max, t_high_max) in seconds
    """
    alpha, beta = params.alpha, params.beta
    level = (params.shift + params.c) ** 2
    t_low = np.pi * np.sqrt(alpha / beta)
    t_high = np.pi * np.sqrt(alpha * level / (beta * level + (params.c * omega0) ** 2))
    return float(t_low), float(t_high)


def interval_bounds_regularized(gamma1: float, gamma2: float, c: float) -> float:
    """Firing interval of the regularized laws where the signal is negligible."""
    if gamma1 <= 0 or gamma2 <= 0:
        raise ParameterError("regularized bound needs gamma1 > 0 and gamma2 > 0")
    return float(np.pi * gamma1 / (gamma2 * (np.pi * c * gamma1 + 1.0)))


def firing_rate_profile(encoding: Encoding) -> FiringRateProfile:
    """
    Firing rate per interval and the share of intervals slower than Nyquist.

    Raises:
        ParameterError: Fewer than two firings
    """
    if encoding.sample_count < 1:
        raise ParameterError("firing-rate profile needs at least two firings")
    intervals = encoding.intervals
    nyquist_rate = encoding.metadata.omega0 / np.pi
    rates = 1.0 / intervals
    return FiringRateProfile(
        midpoints=encoding.midpoints.tolist(),
        rates=rates.tolist(),
        nyquist_rate=float(nyquist_rate),
        sub_nyquist_fraction=float(np.mean(rates < nyquist_rate)),
    )


def windowed_density(encoding: Encoding, window_len: float, step: Optional[float] = None) -> DensityEstimate:
    """
    Minimum over t of (#firings in [t, t + window_len]) / window_len.

    The window slides across the firing span at fine-grid resolution.

    Args:
        encoding: Encoding to inspect
        window_len: Window length in seconds
        step: Slide step (defaults to the encoding's fine-grid spacing)

    Returns:
        DensityEstimate in firings per second
    """
    times = encoding.times
    span = times[-1] - times[0]
    if window_len <= 0 or window_len > span:
        raise ParameterError(f"window length {window_len} must lie in (0, {span}]")
    if step is None:
        step = np.pi / encoding.metadata.omega0 / encoding.metadata.grid_oversample
    starts = np.arange(times[0], times[-1] - window_len + step / 2.0, step)
    starts = np.minimum(starts, times[-1] - window_len)
    counts = np.searchsorted(times, starts + window_len, side="right") - np.searchsorted(times, starts, side="left")
    return DensityEstimate(
        window_len=window_len,
        min_density=float(counts.min() / window_len),
        nyquist_rate=float(encoding.metadata.omega0 / np.pi),
    )
