import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from src.encoder.params import Encoding
from src.errors import ParameterError, ReconstructionError
from src.signals.model import BandlimitedSignal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

SPACING_TOLERANCE = 1e-9


def kernel(t, omega0: float) -> np.ndarray:
    """g(t) = sin(omega0 t) / (pi t) with g(0) = omega0 / pi."""
    t = np.asarray(t, dtype=float)
    return (omega0 / np.pi) * np.sinc(omega0 * t / np.pi)


def output_grid(window: Tuple[float, float], omega0: float, oversample: int = 16) -> np.ndarray:
    """Uniform grid over the window with spacing at most (pi / omega0) / oversample."""
    if oversample < 8:
        raise ParameterError(f"output grid must oversample the band at least 8x, got {oversample}")
    length = window[1] - window[0]
    n_cells = int(np.ceil(length / (np.pi / omega0 / oversample) - 1e-9))
    return np.linspace(window[0], window[1], n_cells + 1)


def kernel_matrix(grid: np.ndarray, centers: np.ndarray, omega0: float) -> np.ndarray:
    """G[i, n] = g(grid[i] - centers[n])."""
    return kernel(grid[:, None] - centers[None, :], omega0)


def interval_kernel_integrals(firings: np.ndarray, centers: np.ndarray, omega0: float) -> np.ndarray:
    """
    M[m, n] = integral of g(t - centers[n]) over [firings[m], firings[m + 1]].

    Uses the sine integral: the antiderivative of g(u) is Si(omega0 u) / pi.
    """
    si, _ = special.sici(omega0 * (firings[:, None] - centers[None, :]))
    return (si[1:] - si[:-1]) / np.pi


def apply_operator_A(encoding: Encoding, omega0: float, grid: np.ndarray,
                     offset_augment: bool = True) -> np.ndarray:
    """
    Sum of the interval averages times kernels centred at the interval midpoints.

    Args:
        encoding: Encoding with at least one average
        omega0: Band limit of the kernel in rad/s
        grid: Instants at which to evaluate
        offset_augment: Use y_n + s T_n so the operator acts on f + s

    Returns:
        Values of the operator output on the grid
    """
    if encoding.sample_count < 1:
        raise ReconstructionError("operator needs an encoding with at least one average")
    weights = encoding.shifted_averages() if offset_augment else encoding.y
    return kernel_matrix(np.asarray(grid, dtype=float), encoding.midpoints, omega0) @ weights


def covered_mask(grid: np.ndarray, encoding: Encoding) -> np.ndarray:
    """Grid points inside the span [t_0, t_N] of the encoding's firings."""
    return (grid >= encoding.firings[0]) & (grid <= encoding.firings[-1])


def contraction_ratio(signal: BandlimitedSignal, encoding: Encoding, grid: np.ndarray) -> float:
    """
    ||f~ - A f~||^2 / ||f~||^2 on the covered part of the grid, with f~ = f + s.

    Raises:
        ReconstructionError: f + s vanishes on the grid
    """
    mask = covered_mask(grid, encoding)
    points = grid[mask]
    shifted = signal.value(points) + encoding.shift
    norm = float(np.sum(shifted ** 2))
    if norm == 0.0:
        raise ReconstructionError("contraction undefined for a zero-norm signal")
    if encoding.sample_count < 1:
        return 1.0
    operated = apply_operator_A(encoding, signal.omega0, points)
    return float(np.sum((shifted - operated) ** 2) / norm)


def uniform_samples(signal: BandlimitedSignal, fs: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Uniform samples t_k = t_start + k / fs covering the half-open window.

    Args:
        signal: Signal to sample
        fs: Sampling rate in Hz (defaults to the Nyquist rate omega0 / pi)

    Returns:
        (times, values)
    """
    fs = signal.omega0 / np.pi if fs is None else fs
    if fs <= 0:
        raise ParameterError(f"sampling rate must be positive, got {fs}")
    count = int(np.floor(signal.duration * fs + 1e-9))
    times = signal.t_start + np.arange(count) / fs
    return times, signal.value(times)


def sinc_interpolate_uniform(times: Sequence[float], values: Sequence[float], fs: float,
                             grid: np.ndarray) -> np.ndarray:
    """
    Classical sinc interpolation sum_k v_k sinc(fs (t - t_k)).

    Raises:
        ParameterError: The sample instants are not spaced 1/fs apart
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size > 1:
        spacing = np.diff(times)
        if np.any(np.abs(spacing - 1.0 / fs) > SPACING_TOLERANCE / fs):
            raise ParameterError("sinc interpolation needs samples spaced exactly 1/fs apart")
    grid = np.asarray(grid, dtype=float)
    return np.sinc(fs * (grid[:, None] - times[None, :])) @ values


def guard_slice(size: int, guard_band: float) -> slice:
    """Central slice that drops a guard_band fraction of points at each end."""
    if not 0.0 <= guard_band < 0.5:
        raise ParameterError(f"guard band must lie in [0, 0.5), got {guard_band}")
    cut = int(np.floor(guard_band * size))
    return slice(cut, size - cut)


def nmse(reference, estimate, guard_band: float = 0.0) -> float:
    """
    Normalized mean-squared error in dB: 10 log10(||f - f_hat||^2 / ||f||^2).

    Args:
        reference: Ground-truth values on a grid
        estimate: Estimated values on the same grid
        guard_band: Fraction of points excluded at each end

    Returns:
        NMSE in dB, or -inf when the estimate equals the reference
    """
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise ParameterError(f"grids differ: {reference.shape} vs {estimate.shape}")
    keep = guard_slice(reference.size, guard_band)
    denominator = float(np.sum(reference[keep] ** 2))
    if denominator == 0.0:
        raise ReconstructionError("NMSE undefined for a zero reference")
    numerator = float(np.sum((reference[keep] - estimate[keep]) ** 2))
    if numerator == 0.0:
        return float("-inf")
    return 10.0 * np.log10(numerator / denominator)
