import logging
from typing import Callable, Dict, List, Tuple, Union

import numpy as np

from src.encoder.params import (AdaptiveParams, ConventionalParams, Encoding, EncodingMetadata, Regime,
                                VbtMode, VbtParams)
from src.encoder.solver import (ENERGY_FLOOR, ConstantBias, ConstantThreshold, EnergyBias, EnergyThreshold,
                                find_next_firing)
from src.errors import DomainError, EncodingError, EndOfWindow, LowEnergyError, ParameterError
from src.signals.model import BandlimitedSignal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

DEFAULT_MAX_FIRINGS = 200000
# Relative tolerance of the average identity checked after encoding
IDENTITY_TOLERANCE = 1e-6

REGULARIZED_WARNING = "regularized bias/threshold laws carry no proven reconstruction guarantee"

LawSelector = Callable[[int, float], Tuple[object, object, Regime]]


def vbt_laws(params: VbtParams) -> Tuple[EnergyBias, EnergyThreshold]:
    """Bias and threshold laws for one (alpha, beta) pair."""
    return (EnergyBias(params.alpha, params.shift, params.c, params.gamma1),
            EnergyThreshold(params.beta, params.gamma2))


def _check_amplitude(signal: BandlimitedSignal, c: float) -> None:
    if c < signal.amp_bound * (1.0 - 1e-12):
        raise ParameterError(f"encoder amplitude bound c={c} is below the signal's bound {signal.amp_bound}")


def _run(signal: BandlimitedSignal, select: LawSelector, scheme: str, params: Dict, shift: float,
         oversample: int, max_firings: int, self_check: bool, warnings: List[str],
         low_energy_guard: bool = False) -> Encoding:
    grid = signal.fine_grid(oversample)
    _, _, energy = grid.tables("energy", shift)

    t = signal.t_start
    firings = [t]
    columns: Dict[str, List] = {k: [] for k in ("averages", "energies", "derivative_energies",
                                                "thresholds", "bias_integrals", "regimes")}
    floored: List[int] = []
    while True:
        n = len(firings) - 1
        if n >= max_firings:
            logger.error(f"Encoder exceeded {max_firings} firings on '{signal.name}'")
            raise EncodingError(f"more than {max_firings} firings; raise max_firings or check the parameters")
        if low_energy_guard and energy[-1] - grid.cumulative_at("energy", t, shift) <= ENERGY_FLOOR:
            raise LowEnergyError(n, t)

        bias_law, threshold_law, regime = select(n, t)
        try:
            firing = find_next_firing(grid, t, bias_law, threshold_law, shift=shift)
        except EndOfWindow:
            break

        firings.append(firing.t)
        columns["averages"].append(firing.signal_integral)
        columns["energies"].append(firing.e)
        columns["derivative_energies"].append(firing.d)
        columns["thresholds"].append(firing.threshold)
        columns["bias_integrals"].append(firing.bias_integral)
        columns["regimes"].append(regime)
        if firing.floored:
            floored.append(n)
        t = firing.t

    tail = signal.t_end - t
    if tail > 0:
        logger.info(f"Discarded final partial interval of {tail:.6g}s")
    if floored:
        logger.warning(f"{len(floored)} intervals of '{signal.name}' were held to the minimum firing step")
        warnings = warnings + [f"{len(floored)} firing intervals held to the minimum step"]

    encoding = Encoding(
        firings=firings,
        **columns,
        metadata=EncodingMetadata(
            scheme=scheme, params=params, signal_id=signal.identifier, signal_name=signal.name,
            omega0=signal.omega0, shift=shift, t0=signal.t_start, window=signal.window,
            grid_oversample=oversample, discarded_tail=max(tail, 0.0), warnings=warnings,
            floored_intervals=floored,
        ),
    )
    if self_check:
        check_average_identity(encoding)
    logger.info(f"Encoded '{signal.name}' with {scheme}: {encoding.sample_count} firings")
    return encoding


def check_average_identity(encoding: Encoding) -> None:
    """
    Verify y_n = Delta_n - int b_n - s T_n on every interval that met its threshold.

    Intervals held to the minimum firing step never reached the threshold
    and are skipped.

    Raises:
        EncodingError: The identity fails beyond a 1e-6 relative tolerance
    """
    y = encoding.y
    delta = np.asarray(encoding.thresholds, dtype=float)
    predicted = delta - np.asarray(encoding.bias_integrals, dtype=float) - encoding.shift * encoding.intervals
    scale = np.maximum(np.abs(delta), np.abs(y))
    failing = np.abs(y - predicted) > IDENTITY_TOLERANCE * scale
    failing[encoding.metadata.floored_intervals] = False
    bad = np.flatnonzero(failing)
    if bad.size:
        n = int(bad[0])
        logger.error(f"Average identity failed on interval {n}: y={y[n]:.12g}, predicted={predicted[n]:.12g}")
        raise EncodingError(f"average identity failed on {bad.size} intervals, first at interval {n}")


def encode_conventional(signal: BandlimitedSignal, params: ConventionalParams, oversample: int = 64,
                        max_firings: int = DEFAULT_MAX_FIRINGS, self_check: bool = True) -> Encoding:
    """
    Conventional integrate-and-fire encoding with constant bias b and threshold Delta.

    Args:
        signal: Signal to encode
        params: Bias and threshold; the bias must exceed the signal's amplitude bound
        oversample: Fine-grid points per Nyquist interval
        max_firings: Safety limit on the number of firings
        self_check: Verify y_n = Delta - b T_n after encoding

    Returns:
        Encoding with scheme 'conventional'
    """
    if params.bias <= signal.amp_bound:
        raise ParameterError(f"bias b={params.bias} must exceed the amplitude bound c={signal.amp_bound}")
    bias_law, threshold_law = ConstantBias(params.bias), ConstantThreshold(params.threshold)
    return _run(signal, lambda n, t: (bias_law, threshold_law, Regime.FIXED), "conventional",
                params.model_dump(), 0.0, oversample, max_firings, self_check, [])


def encode_vbt(signal: BandlimitedSignal, params: VbtParams, mode: Union[VbtMode, str] = VbtMode.SHIFTED,
               oversample: int = 64, max_firings: int = DEFAULT_MAX_FIRINGS,
               self_check: bool = True) -> Encoding:
    """
    Variable-bias, variable-threshold encoding.

    Args:
        signal: Signal to encode
        params: (alpha, beta, s, c) and, for the regularized mode, (gamma1, gamma2)
        mode: 'unshifted' (s = 0), 'shifted' (s > c) or 'regularized'
        oversample: Fine-grid points per Nyquist interval
        max_firings: Safety limit on the number of firings
        self_check: Verify the average identity after encoding

    Returns:
        Encoding with scheme 'vbt-<mode>'

    Raises:
        LowEnergyError: Unshifted mode met an interval whose energy never leaves the floor
    """
    mode = VbtMode(mode)
    params.check_mode(mode)
    _check_amplitude(signal, params.c)
    params = params.effective(mode)

    warnings = []
    if mode == VbtMode.REGULARIZED:
        logger.warning(f"Encoding '{signal.name}' with {REGULARIZED_WARNING}")
        warnings.append(REGULARIZED_WARNING)

    bias_law, threshold_law = vbt_laws(params)
    return _run(signal, lambda n, t: (bias_law, threshold_law, Regime.FIXED), f"vbt-{mode.value}",
                params.model_dump(), params.shift, oversample, max_firings, self_check, warnings,
                low_energy_guard=mode == VbtMode.UNSHIFTED)


def encode_adaptive(signal: BandlimitedSignal, params: AdaptiveParams, oversample: int = 64,
                    max_firings: int = DEFAULT_MAX_FIRINGS, self_check: bool = True) -> Encoding:
    """
    Two-level adaptive encoding.

    At each firing the product |f(t_n) f'(t_n)| is compared with delta_switch;
    the high-variation pair is used on the next interval when it is at least
    delta_switch, the low-variation pair otherwise.
    """
    params.high.check_mode(VbtMode.SHIFTED)
    _check_amplitude(signal, params.high.c)
    high = vbt_laws(params.high)
    low = vbt_laws(params.low)

    def select(n: int, t: float):
        f, fp = signal.derivatives(t, order=1)
        if abs(float(f[0]) * float(fp[0])) >= params.delta_switch:
            return high[0], high[1], Regime.HIGH
        return low[0], low[1], Regime.LOW

    return _run(signal, select, "adaptive", params.model_dump(), params.high.shift, oversample,
                max_firings, self_check, [])


def compute_average(signal: BandlimitedSignal, t_a: float, t_b: float, oversample: int = 64) -> float:
    """Integral of f over [t_a, t_b] on the signal's fine grid."""
    if t_a > t_b:
        raise DomainError(f"average needs t_a <= t_b, got [{t_a}, {t_b}]")
    signal.check_inside(t_a, t_b)
    grid = signal.fine_grid(oversample)
    return grid.cumulative_at("signal", t_b) - grid.cumulative_at("signal", t_a)


def uniform_encoding(signal: BandlimitedSignal, spacing: float, oversample: int = 64) -> Encoding:
    """
    Wrap uniformly spaced instants as an Encoding so the analysis checks apply to it.

    Args:
        signal: Signal being sampled
        spacing: Distance between instants in seconds
        oversample: Fine-grid points per Nyquist interval

    Returns:
        Encoding with scheme 'uniform' (no bias or threshold; those columns are zero)
    """
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    count = int(np.floor(signal.duration / spacing + 1e-9))
    firings = signal.t_start + spacing * np.arange(count + 1)
    firings[-1] = min(firings[-1], signal.t_end)
    grid = signal.fine_grid(oversample)
    averages = np.diff(grid.cumulative_at("signal", firings))
    energies = np.maximum(np.diff(grid.cumulative_at("energy", firings)), 0.0)
    derivative = np.maximum(np.diff(grid.cumulative_at("derivative_energy", firings)), 0.0)
    zeros = [0.0] * count
    return Encoding(
        firings=firings.tolist(), averages=averages.tolist(), energies=energies.tolist(),
        derivative_energies=derivative.tolist(), thresholds=zeros, bias_integrals=zeros,
        regimes=[Regime.FIXED] * count,
        metadata=EncodingMetadata(
            scheme="uniform", params={"spacing": spacing}, signal_id=signal.identifier,
            signal_name=signal.name, omega0=signal.omega0, t0=signal.t_start, window=signal.window,
            grid_oversample=oversample, discarded_tail=max(signal.t_end - float(firings[-1]), 0.0),
        ),
    )


def interval_laws(encoding: Encoding, n: int) -> Tuple[object, object]:
    """Rebuild the bias and threshold laws that produced interval n."""
    scheme = encoding.metadata.scheme
    params = encoding.metadata.params
    if scheme == "conventional":
        return ConstantBias(params["bias"]), ConstantThreshold(params["threshold"])
    vbt = encoding.interval_params(n)
    if vbt is None:
        raise ParameterError(f"scheme '{scheme}' has no firing laws")
    return vbt_laws(vbt)
