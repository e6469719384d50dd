import logging
from typing import List, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre
from pydantic import BaseModel, Field

from src.analysis.profiles import interval_bounds
from src.encoder.params import Encoding
from src.encoder.solver import integral_trace
from src.encoder.tem import interval_laws
from src.errors import MetadataMismatchError, ParameterError, VerificationError
from src.reconstruction.operator import contraction_ratio, output_grid
from src.signals.model import BandlimitedSignal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Multiplicative slack for theorem-backed inequalities
THEOREM_SLACK = 1e-6
# Slack for quantities affected by finite-window truncation
TRUNCATION_SLACK = 0.05

_GAUSS_NODES, _GAUSS_WEIGHTS = legendre.leggauss(24)


class IntervalReport(BaseModel):
    """Per-interval local-condition and interval-bound checks plus the aggregate condition."""
    T: List[float]
    E: List[float]
    D: List[float]
    bound_rhs: List[float] = Field(description="pi sqrt(E/D), +inf when D = 0")
    theorem_bound: List[Optional[float]]
    high_variation_bound: List[Optional[float]]
    local_pass: List[bool]
    theorem_pass: List[bool]
    regimes: List[str]
    aggregate_lhs: float
    aggregate_rhs: float
    aggregate_pass: bool
    alpha: float

    @property
    def passed(self) -> List[bool]:
        return [a and b for a, b in zip(self.local_pass, self.theorem_pass)]

    @property
    def pass_rate(self) -> float:
        flags = self.passed
        return float(np.mean(flags)) if flags else 1.0

    @property
    def all_passed(self) -> bool:
        return all(self.passed) and self.aggregate_pass


class WirtingerReport(BaseModel):
    """Both sides of the per-interval Wirtinger inequality."""
    lhs: List[float]
    rhs: List[float]
    passed: List[bool]

    @property
    def ratios(self) -> List[float]:
        return [l / r if r > 0 else 0.0 for l, r in zip(self.lhs, self.rhs)]


class BernsteinReport(BaseModel):
    derivative_energy: float
    bound: float
    passed: bool


class DecayReport(BaseModel):
    """NMSE trace against the geometric envelope 10 log10(rate^(l+1)) + offset."""
    rate: float
    envelope: List[float]
    trace: List[float]
    passed: bool


def check_metadata(signal: BandlimitedSignal, encoding: Encoding) -> None:
    if signal.identifier != encoding.metadata.signal_id:
        raise MetadataMismatchError(
            f"encoding belongs to signal {encoding.metadata.signal_id} "
            f"({encoding.metadata.signal_name}), not {signal.identifier} ({signal.name})"
        )


def check_local_condition(signal: BandlimitedSignal, encoding: Encoding) -> IntervalReport:
    """
    Check T_n < pi sqrt(E_n / D_n) and the scheme's interval bound on every interval.

    The aggregate sum (T_n^2 / pi^2) D_n <= alpha sum E_n is checked with the
    encoding's alpha; non-VBT schemes use alpha = (T_max omega0 / pi)^2.
    """
    check_metadata(signal, encoding)
    T = encoding.intervals
    E = np.asarray(encoding.energies, dtype=float)
    D = np.asarray(encoding.derivative_energies, dtype=float)
    omega0 = encoding.metadata.omega0

    with np.errstate(divide="ignore", invalid="ignore"):
        bound_rhs = np.where(D > 0, np.pi * np.sqrt(E / np.where(D > 0, D, 1.0)), np.inf)
    local_pass = T < bound_rhs

    theorem_bound: List[Optional[float]] = []
    high_bound: List[Optional[float]] = []
    for n in range(encoding.sample_count):
        params = encoding.interval_params(n)
        if params is None:
            theorem_bound.append(None)
            high_bound.append(None)
            continue
        numerator = params.alpha * E[n] + params.gamma1 ** 2
        denominator = D[n] + params.beta * E[n] + params.gamma2 ** 2
        theorem_bound.append(float(np.pi * np.sqrt(numerator / denominator)))
        high_bound.append(interval_bounds(params, omega0)[1])
    theorem_pass = [b is None or t <= b * (1.0 + THEOREM_SLACK) for t, b in zip(T, theorem_bound)]

    alpha = encoding.alpha()
    if alpha is None:
        alpha = float((T.max() * omega0 / np.pi) ** 2) if T.size else 0.0
    aggregate_lhs = float(np.sum(T ** 2 / np.pi ** 2 * D))
    aggregate_rhs = float(alpha * np.sum(E))

    report = IntervalReport(
        T=T.tolist(), E=E.tolist(), D=D.tolist(), bound_rhs=bound_rhs.tolist(),
        theorem_bound=theorem_bound, high_variation_bound=high_bound,
        local_pass=local_pass.tolist(), theorem_pass=theorem_pass,
        regimes=[r.value for r in encoding.regimes],
        aggregate_lhs=aggregate_lhs, aggregate_rhs=aggregate_rhs,
        aggregate_pass=aggregate_lhs <= aggregate_rhs * (1.0 + THEOREM_SLACK), alpha=alpha,
    )
    failures = len(report.passed) - sum(report.passed)
    if failures:
        logger.warning(f"Local condition failed on {failures} of {encoding.sample_count} intervals")
    return report


def _gauss_panels(t_a: float, t_b: float, panel: float):
    """Gauss-Legendre nodes and weights on [t_a, t_b] split into panels no longer than `panel`."""
    pieces = max(1, int(np.ceil((t_b - t_a) / panel)))
    edges = np.linspace(t_a, t_b, pieces + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]).ravel()
    weights = (half[:, None] * _GAUSS_WEIGHTS[None, :]).ravel()
    return nodes, weights


def wirtinger_check(signal: BandlimitedSignal, encoding: Encoding) -> WirtingerReport:
    """
    Check int |f~ - f~(s_n)|^2 <= (T_n / pi)^2 int |f~'|^2 on every interval.

    Both sides use Gauss-Legendre quadrature on panels of at most half a
    Nyquist interval; the constant shift cancels on the left side.
    """
    check_metadata(signal, encoding)
    panel = signal.nyquist_interval / 2.0
    lhs, rhs, passed = [], [], []
    for t_a, t_b, mid in zip(encoding.firings[:-1], encoding.firings[1:], encoding.midpoints):
        nodes, weights = _gauss_panels(t_a, t_b, panel)
        f, fp = signal.derivatives(nodes, order=1)
        centre = float(signal.value(mid)[0])
        left = float(weights @ (f - centre) ** 2)
        right = float((t_b - t_a) ** 2 / np.pi ** 2 * (weights @ fp ** 2))
        lhs.append(left)
        rhs.append(right)
        passed.append(left <= right * (1.0 + THEOREM_SLACK))
    return WirtingerReport(lhs=lhs, rhs=rhs, passed=passed)


def bernstein_check(signal: BandlimitedSignal, oversample: int = 64) -> BernsteinReport:
    """Check ||f'||^2 <= omega0^2 ||f||^2 over the window."""
    grid = signal.fine_grid(oversample)
    derivative = grid.cumulative_at("derivative_energy", signal.t_end)
    bound = signal.omega0 ** 2 * grid.cumulative_at("energy", signal.t_end, 0.0)
    return BernsteinReport(derivative_energy=derivative, bound=bound,
                           passed=derivative <= bound * (1.0 + THEOREM_SLACK))


def estimate_contraction(signal: BandlimitedSignal, encoding: Encoding, omega0: Optional[float] = None,
                         oversample: int = 16) -> float:
    """||f~ - A f~||^2 / ||f~||^2 on the output grid over the firing span."""
    check_metadata(signal, encoding)
    omega0 = omega0 or encoding.metadata.omega0
    grid = output_grid(signal.window, omega0, oversample)
    return contraction_ratio(signal, encoding, grid)


def scan_trace(signal: BandlimitedSignal, encoding: Encoding, n: int):
    """Running integral and threshold on the fine-grid nodes of interval n."""
    check_metadata(signal, encoding)
    if not 0 <= n < encoding.sample_count:
        raise ParameterError(f"interval {n} out of range [0, {encoding.sample_count})")
    bias_law, threshold_law = interval_laws(encoding, n)
    return integral_trace(signal.fine_grid(encoding.metadata.grid_oversample), encoding.firings[n],
                          encoding.firings[n + 1], bias_law, threshold_law, shift=encoding.shift)


def firing_residuals(signal: BandlimitedSignal, encoding: Encoding) -> np.ndarray:
    """
    |int (f~ + b_n) - Delta_n(t_{n+1})| / Delta_n(t_{n+1}) recomputed for every interval.

    Intervals held to the minimum firing step did not close on the threshold;
    their entries are zero.
    """
    residuals = np.zeros(encoding.sample_count)
    floored = set(encoding.metadata.floored_intervals)
    for n in range(encoding.sample_count):
        if n in floored:
            continue
        trace = scan_trace(signal, encoding, n)
        residuals[n] = abs(trace["integral"][-1] - trace["threshold"][-1]) / trace["threshold"][-1]
    return residuals


def monotone_scan_check(signal: BandlimitedSignal, encoding: Encoding) -> List[bool]:
    """Per interval: I(t) strictly increasing and Delta_n(t) non-increasing on the grid."""
    flags = []
    for n in range(encoding.sample_count):
        trace = scan_trace(signal, encoding, n)
        integral, threshold = trace["integral"], trace["threshold"]
        finite = np.isfinite(threshold)
        rising = bool(np.all(np.diff(integral) > 0.0)) and integral[0] > 0.0
        steps = np.diff(threshold[finite])
        falling = bool(np.all(steps <= 1e-12 * np.abs(threshold[finite][1:])))
        flags.append(rising and falling)
    return flags


def trace_is_monotone(trace: Sequence[float], start: int = 3, slack_db: float = 0.1) -> bool:
    """True when the trace never rises by more than slack_db after iteration `start`."""
    values = np.asarray(trace, dtype=float)[start:]
    return bool(np.all(np.diff(values) <= slack_db)) if values.size > 1 else True


def geometric_decay_check(trace: Sequence[float], rate: float, iterations: int = 10,
                          slack_db: float = 3.0) -> DecayReport:
    """
    Compare the first iterations of an NMSE trace with rate^(l+1).

    The envelope is anchored at trace[0] and floored at the trace's plateau,
    so reaching the numerical floor early is not a failure.
    """
    if not 0.0 < rate < 1.0:
        raise ParameterError(f"decay rate must lie in (0, 1), got {rate}")
    values = np.asarray(trace, dtype=float)
    if values.size == 0:
        raise ParameterError("empty NMSE trace")
    count = min(iterations, values.size)
    offset = values[0] - 10.0 * np.log10(rate)
    plateau = float(np.min(values))
    levels = 10.0 * np.log10(rate) * (np.arange(count) + 1.0) + offset
    envelope = np.maximum(levels, plateau)
    passed = bool(np.all(values[:count] <= envelope + slack_db))
    return DecayReport(rate=rate, envelope=envelope.tolist(), trace=values[:count].tolist(), passed=passed)


def require(condition: bool, message: str) -> None:
    """Raise VerificationError when a theorem-backed check fails."""
    if not condition:
        logger.error(f"Verification failed: {message}")
        raise VerificationError(message)
