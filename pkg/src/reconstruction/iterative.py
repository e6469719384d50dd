import json
import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.encoder.params import Encoding
from src.errors import MetadataMismatchError, NonContractionError, ReconstructionError, ReportIOError
from src.reconstruction.operator import (contraction_ratio, covered_mask, guard_slice, interval_kernel_integrals,
                                         kernel_matrix, nmse)
from src.signals.model import BandlimitedSignal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Trace rises before this iteration are part of the transient
MONOTONE_AFTER = 3


class ReconstructionConfig(BaseModel):
    """
    Settings of the iterative reconstruction.

    Args:
        omega0: Band limit in rad/s
        grid_dt: Output grid spacing, at most a eighth of the Nyquist interval
        max_iters: Iteration cap
        stop_delta_db: Stop once an iteration improves the tracked dB value by less than this
        rise_tolerance_db: A later rise larger than this stops the run as diverging
        shift: Constant s of a shifted encoding
        carry_offset: Carry s as an exact constant instead of rebuilding it from kernels
        guard_band: Fraction of the evaluation span excluded at each end from NMSE
        divergence_factor: Norm growth that counts as divergence
        divergence_window: Iterations over which the growth is measured
    """
    model_config = ConfigDict(frozen=True)

    omega0: float = Field(gt=0)
    grid_dt: float = Field(gt=0)
    max_iters: int = Field(default=500, ge=1)
    stop_delta_db: float = Field(default=1e-3, ge=0)
    rise_tolerance_db: float = Field(default=0.1, ge=0)
    shift: float = 0.0
    carry_offset: bool = True
    guard_band: float = Field(default=0.0, ge=0, lt=0.5)
    divergence_factor: float = Field(default=10.0, gt=1)
    divergence_window: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _check_grid(self) -> "ReconstructionConfig":
        if self.grid_dt > np.pi / self.omega0 / 8.0 * (1.0 + 1e-12):
            raise ValueError(f"grid_dt {self.grid_dt} must be at most a eighth of the Nyquist interval")
        return self

    @classmethod
    def for_encoding(cls, encoding: Encoding, oversample: int = 16, **overrides) -> "ReconstructionConfig":
        omega0 = encoding.metadata.omega0
        values = {"omega0": omega0, "grid_dt": np.pi / omega0 / oversample, "shift": encoding.shift}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class ReconstructionResult(BaseModel):
    """Reconstructed signal on the output grid plus convergence diagnostics."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: np.ndarray
    f_hat: np.ndarray
    coefficients: np.ndarray
    nmse_trace: List[float] = Field(default_factory=list)
    residual_trace: List[float] = Field(default_factory=list)
    iterations_run: int
    empirical_contraction: Optional[float] = None
    stop_reason: str = "max_iters"
    runtime_s: float = 0.0

    @property
    def final_nmse(self) -> Optional[float]:
        return self.nmse_trace[-1] if self.nmse_trace else None


def _grid(window, grid_dt: float) -> np.ndarray:
    length = window[1] - window[0]
    n_cells = int(np.ceil(length / grid_dt - 1e-9))
    return np.linspace(window[0], window[1], n_cells + 1)


def _db(numerator: float, denominator: float) -> float:
    if numerator == 0.0:
        return float("-inf")
    return 10.0 * np.log10(numerator / denominator)


def classify_step(tracked: Sequence[float], config: ReconstructionConfig) -> Optional[str]:
    """
    Stop reason after the latest value of a dB trace, or None to keep iterating.

    'exact' when the value reached -inf, 'diverging' when it rose by more than
    rise_tolerance_db past the transient, 'plateau' when it improved by less
    than stop_delta_db. A smaller rise is never a plateau.
    """
    if tracked[-1] == float("-inf"):
        return "exact"
    iteration = len(tracked) - 1
    if iteration < 1:
        return None
    improvement = tracked[-2] - tracked[-1]
    if improvement < -config.rise_tolerance_db:
        return "diverging" if iteration > MONOTONE_AFTER else None
    if 0.0 <= improvement < config.stop_delta_db:
        return "plateau"
    return None


def iterative_reconstruct(encoding: Encoding, config: ReconstructionConfig,
                          ground_truth: Optional[BandlimitedSignal] = None) -> ReconstructionResult:
    """
    Recover a bandlimited signal from its firing instants and interval averages.

    The recursion runs on the shifted signal f~ = f + s. The stored averages
    are offset-augmented to y~_n = y_n + s T_n, the first iterate is the
    operator output A f~ and every step adds sum_n r_n g(t - s_n) with the
    residual averages r_n = y~_n - int_{I_n} f~_l. The iterate is kept as
    c + sum_n a_n g(t - s_n); M holds the closed-form integrals of every
    kernel over every interval, so int_{I_n} f~_l = c T_n + (M a)_n. The shift
    is subtracted once from the final iterate.

    With carry_offset the constant c = s is carried exactly: the operator
    maps the known constant to itself and only f enters the kernel sum.
    Without it c = 0 and the kernel sum has to rebuild s as well, which it
    can only do approximately near the edges of the covered span.

    The run stops at max_iters, when the tracked dB value (NMSE against the
    ground truth, or the relative residual) improves by less than
    stop_delta_db, or when it rises by more than rise_tolerance_db after the
    first iterations, which is reported as 'diverging'.

    Args:
        encoding: Encoding to reconstruct
        config: Grid, stopping rule and divergence detector settings
        ground_truth: Source signal; enables the NMSE trace and the contraction estimate

    Returns:
        ReconstructionResult on a uniform grid over the signal window

    Raises:
        NonContractionError: The coefficient norm grew past the divergence threshold
    """
    if encoding.sample_count < 1:
        raise ReconstructionError("encoding has no intervals to reconstruct from")
    if ground_truth is not None and ground_truth.identifier != encoding.metadata.signal_id:
        raise MetadataMismatchError(
            f"encoding was produced from signal {encoding.metadata.signal_id}, not {ground_truth.identifier}"
        )

    started = time.perf_counter()
    firings = encoding.times
    centers = encoding.midpoints
    intervals = encoding.intervals
    shift = config.shift
    y_tilde = encoding.y + shift * intervals
    constant = shift if config.carry_offset else 0.0
    M = interval_kernel_integrals(firings, centers, config.omega0)
    grid = _grid(encoding.metadata.window, config.grid_dt)
    G = kernel_matrix(grid, centers, config.omega0)

    reference = None
    if ground_truth is not None:
        mask = covered_mask(grid, encoding)
        keep = guard_slice(int(mask.sum()), config.guard_band)
        G_eval = G[mask][keep]
        reference = ground_truth.value(grid[mask][keep])
        if not np.any(reference):
            logger.warning("Ground truth is zero on the evaluation span, NMSE trace disabled")
            reference = None

    # Averages left for the kernel sum once the carried constant is integrated
    kernel_targets = y_tilde - constant * intervals
    y_energy = float(y_tilde @ y_tilde)
    a = kernel_targets.copy()
    norms = [float(np.linalg.norm(a))]
    nmse_trace: List[float] = []
    residual_trace: List[float] = []
    stop_reason = "max_iters"

    for iteration in range(config.max_iters):
        residual = kernel_targets - M @ a
        residual_trace.append(_db(float(residual @ residual), y_energy) if y_energy > 0 else float("-inf"))
        tracked = residual_trace
        if reference is not None:
            nmse_trace.append(nmse(reference, constant - shift + G_eval @ a))
            tracked = nmse_trace

        if not np.all(np.isfinite(a)):
            raise NonContractionError(iteration, int(np.nanargmax(np.abs(residual))), float("nan"))
        if iteration >= config.divergence_window:
            if norms[-1] > config.divergence_factor * norms[-1 - config.divergence_window]:
                worst = int(np.argmax(np.abs(residual)))
                logger.error(f"Reconstruction diverged at iteration {iteration}")
                raise NonContractionError(iteration, worst, float(np.abs(residual[worst])))

        reason = classify_step(tracked, config)
        if reason is not None:
            stop_reason = reason
            if reason == "diverging":
                logger.warning(f"Reconstruction trace rose from {tracked[-2]:.2f} to {tracked[-1]:.2f} dB "
                               f"at iteration {iteration}")
            break
        if iteration + 1 == config.max_iters:
            break

        a = a + residual
        norms.append(float(np.linalg.norm(a)))

    iterations_run = len(residual_trace)
    contraction = None
    if ground_truth is not None:
        try:
            contraction = contraction_ratio(ground_truth, encoding, grid)
        except ReconstructionError:
            contraction = None

    f_hat = constant + G @ a - shift
    runtime = time.perf_counter() - started
    logger.info(
        f"Reconstruction stopped after {iterations_run} iterations ({stop_reason})"
        + (f", NMSE {nmse_trace[-1]:.2f} dB" if nmse_trace else "")
    )
    return ReconstructionResult(
        t=grid, f_hat=f_hat, coefficients=a, nmse_trace=nmse_trace, residual_trace=residual_trace,
        iterations_run=iterations_run, empirical_contraction=contraction, stop_reason=stop_reason,
        runtime_s=runtime,
    )


def _write_frame(frame: pd.DataFrame, config: ReconstructionConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(f"# config={json.dumps(config.model_dump(), sort_keys=True, separators=(',', ':'))}\n")
            frame.to_csv(f, index=False, float_format="%.17g")
    except OSError as e:
        logger.error(f"Failed to write {path}: {str(e)}")
        raise ReportIOError(path, e) from e
    return path


def write_reconstruction_csv(result: ReconstructionResult, config: ReconstructionConfig,
                             path: Union[str, Path]) -> Path:
    """Rows t, f_hat with the config as a JSON header comment."""
    return _write_frame(pd.DataFrame({"t": result.t, "f_hat": result.f_hat}), config, path)


def write_trace_csv(result: ReconstructionResult, config: ReconstructionConfig, path: Union[str, Path]) -> Path:
    """Rows iteration, nmse_db (the residual trace when no ground truth was given)."""
    trace = result.nmse_trace or result.residual_trace
    column = "nmse_db" if result.nmse_trace else "residual_db"
    return _write_frame(pd.DataFrame({"iteration": range(len(trace)), column: trace}), config, path)
