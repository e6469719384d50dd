import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from src.errors import ParameterError
from src.signals.model import BandlimitedSignal, CosineAtom, SincAtom, build_signal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

DEFAULT_WINDOW = (-0.45, 0.45)

# Chirp test signal
CHIRP_ATOMS = 130
CHIRP_SPACING = 0.005
CHIRP_RATE = 100.0

# Two-region sum-of-sincs signal
SOS_RATES = (50.0, 20.0)
SOS_SEGMENT = 0.15
SOS_COEFFS = (50, 100)

# Four-region demo: (segment start, segment end, atom rate Hz, amplitude scale)
FOUR_REGION_BANDS = (
    (-0.40, -0.20, 10.0, 0.25),
    (-0.20, 0.00, 20.0, 0.50),
    (0.00, 0.20, 35.0, 0.75),
    (0.20, 0.40, 50.0, 1.00),
)
FOUR_REGION_SEED = 4


def peak_amplitude(signal: BandlimitedSignal, candidates: Optional[np.ndarray] = None,
                   refine: int = 5) -> float:
    """
    Maximum of |f - offset| over the window.

    The coarse maximum over candidate instants (the fine grid by default) is
    refined with a bounded scalar search around the largest few samples.

    Args:
        signal: Signal to inspect
        candidates: Instants to scan first
        refine: Number of largest samples to refine

    Returns:
        Peak absolute deviation from the offset
    """
    if candidates is None:
        candidates = signal.fine_grid().t
    candidates = np.asarray(candidates, dtype=float)
    values = np.abs(signal.value(candidates) - signal.offset)
    peak = float(values.max()) if values.size else 0.0
    if peak == 0.0 or candidates.size < 2:
        return peak

    step = float(np.min(np.diff(candidates)))
    for idx in np.argsort(values)[::-1][:refine]:
        lo = max(signal.t_start, candidates[idx] - step)
        hi = min(signal.t_end, candidates[idx] + step)
        if hi <= lo:
            continue
        res = optimize.minimize_scalar(
            lambda t: -abs(float(signal.value(t)[0]) - signal.offset),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * signal.duration},
        )
        peak = max(peak, -float(res.fun))
    return peak


def normalize(signal: BandlimitedSignal, candidates: Optional[np.ndarray] = None) -> BandlimitedSignal:
    """Rescale the atoms so that max |f - offset| equals the amplitude bound."""
    peak = peak_amplitude(signal, candidates)
    if peak == 0.0:
        logger.warning(f"Signal '{signal.name}' is identically zero, skipping normalization")
        return signal
    return signal.scaled(signal.amp_bound / peak)


def make_chirp(window: Tuple[float, float] = DEFAULT_WINDOW) -> BandlimitedSignal:
    """
    Deterministic chirp: 130 sinc atoms 5 ms apart with a 100 Hz rate, normalized to max |f| = 1.

    Args:
        window: Observation window in seconds

    Returns:
        Normalized BandlimitedSignal named 'chirp'
    """
    m = np.arange(CHIRP_ATOMS, dtype=float)
    coeffs = np.sin(2.0 * np.pi * 0.005 * m) * np.sin(2.0 * np.pi * 0.081 * m ** 2.1 / (2.0 * CHIRP_ATOMS))
    centers = (m - CHIRP_ATOMS / 2.0) * CHIRP_SPACING
    atoms = [SincAtom(amplitude=float(a), center=float(c), rate=CHIRP_RATE) for a, c in zip(coeffs, centers)]
    signal = build_signal(atoms=atoms, omega0=2.0 * np.pi * CHIRP_RATE, window=window, name="chirp")
    signal = normalize(signal)
    logger.info(f"Generated chirp with {len(atoms)} atoms on window {window}")
    return signal


def make_sos(seed: int, window: Tuple[float, float] = DEFAULT_WINDOW) -> BandlimitedSignal:
    """
    Random two-region sum of sincs.

    A 50 Hz component occupies the middle segment |t| <= 75 ms, and a 20 Hz
    component is copied to both sides, centred at +/-150 ms. Coefficients are
    uniform on [-0.5, 0.5] and drawn from the given seed.

    Args:
        seed: Seed for the coefficient draws
        window: Observation window in seconds

    Returns:
        Normalized BandlimitedSignal named 'sos'
    """
    rng = np.random.default_rng(seed)
    half = SOS_SEGMENT / 2.0
    atoms: List[SincAtom] = []

    f1, f2 = SOS_RATES
    n1, n2 = SOS_COEFFS
    c1 = rng.uniform(-0.5, 0.5, 2 * n1 + 1)
    c2 = rng.uniform(-0.5, 0.5, 2 * n2 + 1)

    period1 = 1.0 / (2.0 * f1)
    for n, coeff in zip(range(-n1, n1 + 1), c1):
        if abs(n * period1) <= half + 1e-12:
            atoms.append(SincAtom(amplitude=float(coeff), center=n * period1, rate=f1))

    period2 = 1.0 / (2.0 * f2)
    for copy_center in (-SOS_SEGMENT, SOS_SEGMENT):
        for n, coeff in zip(range(-n2, n2 + 1), c2):
            if abs(n * period2) <= half + 1e-12:
                atoms.append(SincAtom(amplitude=float(coeff), center=copy_center + n * period2, rate=f2))

    signal = build_signal(atoms=atoms, omega0=2.0 * np.pi * f1, window=window, name=f"sos-{seed}")
    return normalize(signal)


def make_tone(amplitude: float, omega_m: float, window: Tuple[float, float] = DEFAULT_WINDOW,
              omega0: Optional[float] = None, amp_bound: float = 1.0, phase: float = 0.0,
              offset: float = 0.0) -> BandlimitedSignal:
    """
    Single cosine amplitude * cos(omega_m t + phase).

    Args:
        amplitude: A0, at most amp_bound
        omega_m: Tone frequency in rad/s, at most omega0
        window: Observation window in seconds
        omega0: Declared band limit (defaults to omega_m)
        amp_bound: Amplitude bound c
        phase: Phase offset in radians
        offset: Constant added to the tone

    Returns:
        BandlimitedSignal named 'tone'
    """
    if omega0 is None:
        if omega_m <= 0:
            raise ParameterError("omega0 must be given for a constant tone")
        omega0 = omega_m
    if abs(amplitude) > amp_bound:
        raise ParameterError(f"tone amplitude {amplitude} exceeds amplitude bound {amp_bound}")
    if omega_m > omega0:
        raise ParameterError(f"tone frequency {omega_m} exceeds omega0 {omega0}")
    atoms = [CosineAtom(amplitude=amplitude, angular_frequency=omega_m, phase=phase)]
    return build_signal(atoms=atoms, offset=offset, omega0=omega0, amp_bound=amp_bound,
                        window=window, name="tone")


def make_constant(value: float, omega0: float = 2.0 * np.pi * 50.0,
                  window: Tuple[float, float] = DEFAULT_WINDOW) -> BandlimitedSignal:
    """Constant signal f(t) = value, expressed as a zero-frequency tone."""
    return make_tone(value, 0.0, window=window, omega0=omega0, amp_bound=max(1.0, abs(value)))


def make_four_region(window: Tuple[float, float] = DEFAULT_WINDOW,
                     bands: Sequence[Tuple[float, float, float, float]] = FOUR_REGION_BANDS) -> BandlimitedSignal:
    """
    Demo signal with four consecutive regions of increasing amplitude-frequency product.

    Args:
        window: Observation window in seconds
        bands: (start, end, rate Hz, amplitude scale) per region

    Returns:
        Normalized BandlimitedSignal named 'four-region'
    """
    rng = np.random.default_rng(FOUR_REGION_SEED)
    atoms: List[SincAtom] = []
    for start, end, rate, scale in bands:
        period = 1.0 / (2.0 * rate)
        centers = np.arange(start + period / 2.0, end, period)
        coeffs = scale * rng.uniform(-1.0, 1.0, centers.size)
        atoms.extend(SincAtom(amplitude=float(a), center=float(c), rate=rate) for a, c in zip(coeffs, centers))
    top = max(rate for _, _, rate, _ in bands)
    signal = build_signal(atoms=atoms, omega0=2.0 * np.pi * top, window=window, name="four-region")
    return normalize(signal)
