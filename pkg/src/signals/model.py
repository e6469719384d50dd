import hashlib
import logging
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator

from src.errors import DomainError, ParameterError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Below this |pi*x| the sinc derivatives switch to their Taylor series
_SERIES_CUTOFF = 0.05
# Upper bound on (evaluation points x atoms) held in memory at once
_CHUNK_ELEMENTS = 1 << 22
MAX_DERIVATIVE = 4


def sinc_derivatives(x: np.ndarray, order: int = 2) -> Tuple[np.ndarray, ...]:
    """
    Normalized sinc and its derivatives with respect to x.

    Args:
        x: Points at which to evaluate sinc(x) = sin(pi x)/(pi x)
        order: Highest derivative to return (0 to 4)

    Returns:
        Tuple (sinc, d/dx sinc, ...) truncated to the requested order
    """
    if not 0 <= order <= MAX_DERIVATIVE:
        raise ParameterError(f"derivative order must lie in [0, {MAX_DERIVATIVE}], got {order}")
    x = np.asarray(x, dtype=float)
    outputs = [np.sinc(x)]
    if order == 0:
        return tuple(outputs)

    u = np.pi * x
    small = np.abs(u) < _SERIES_CUTOFF
    safe_u = np.where(small, 1.0, u)
    sin_u = np.sin(safe_u)
    cos_u = np.cos(safe_u)
    u2 = u * u

    d1 = (safe_u * cos_u - sin_u) / safe_u ** 2
    d1_series = u * (-1.0 / 3.0 + u2 * (1.0 / 30.0 - u2 / 840.0))
    outputs.append(np.where(small, d1_series, d1) * np.pi)
    if order >= 2:
        d2 = -sin_u / safe_u - 2.0 * cos_u / safe_u ** 2 + 2.0 * sin_u / safe_u ** 3
        d2_series = -1.0 / 3.0 + u2 * (1.0 / 10.0 + u2 * (-1.0 / 168.0 + u2 / 6480.0))
        outputs.append(np.where(small, d2_series, d2) * np.pi ** 2)
    if order >= 3:
        d3 = (-cos_u / safe_u + 3.0 * sin_u / safe_u ** 2 + 6.0 * cos_u / safe_u ** 3
              - 6.0 * sin_u / safe_u ** 4)
        d3_series = u * (1.0 / 5.0 + u2 * (-1.0 / 42.0 + u2 * (1.0 / 1080.0 - u2 / 55440.0)))
        outputs.append(np.where(small, d3_series, d3) * np.pi ** 3)
    if order >= 4:
        d4 = (sin_u / safe_u + 4.0 * cos_u / safe_u ** 2 - 12.0 * sin_u / safe_u ** 3
              - 24.0 * cos_u / safe_u ** 4 + 24.0 * sin_u / safe_u ** 5)
        d4_series = 1.0 / 5.0 + u2 * (-1.0 / 14.0 + u2 * (1.0 / 216.0 - u2 / 7920.0))
        outputs.append(np.where(small, d4_series, d4) * np.pi ** 4)
    return tuple(outputs)


class SincAtom(BaseModel):
    """Weighted sinc atom amplitude * sinc(2 * rate * (t - center))."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["sinc"] = "sinc"
    amplitude: float = Field(allow_inf_nan=False)
    center: float = Field(allow_inf_nan=False)
    rate: float = Field(gt=0, description="Half-bandwidth F of the atom in Hz")


class CosineAtom(BaseModel):
    """Cosine atom amplitude * cos(angular_frequency * t + phase)."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["cosine"] = "cosine"
    amplitude: float = Field(allow_inf_nan=False)
    angular_frequency: float = Field(ge=0, description="Omega_m in rad/s")
    phase: float = 0.0


Atom = Annotated[Union[SincAtom, CosineAtom], Field(discriminator="kind")]


class EnergyPair(BaseModel):
    """Signal-energy and derivative-energy integrals over one interval."""
    model_config = ConfigDict(frozen=True)

    e: float = Field(ge=0)
    d: float = Field(ge=0)


class BandlimitedSignal(BaseModel):
    """
    Analytic bandlimited signal: constant offset plus a list of sinc and cosine atoms.

    The signal is immutable once built. Values and derivatives are evaluated in
    closed form; quadrature runs on a cached fine grid (see src.signals.grid).
    """
    model_config = ConfigDict(frozen=True)

    atoms: List[Atom] = Field(default_factory=list)
    offset: float = 0.0
    omega0: float = Field(gt=0, description="Declared band limit in rad/s")
    amp_bound: float = Field(default=1.0, gt=0, description="Amplitude bound c")
    window: Tuple[float, float]
    name: str = "signal"
    scale: float = Field(default=1.0, description="Factor applied to the source amplitudes by normalization")
    band_declared: bool = Field(default=False, description="omega0 is a caller claim rather than implied by the atoms")

    _sinc: Dict[str, np.ndarray] = PrivateAttr(default_factory=dict)
    _cosine: Dict[str, np.ndarray] = PrivateAttr(default_factory=dict)
    _grids: Dict[int, object] = PrivateAttr(default_factory=dict)
    _identifier: Optional[str] = PrivateAttr(default=None)

    @field_validator("window")
    @classmethod
    def _check_window(cls, window: Tuple[float, float]) -> Tuple[float, float]:
        if not (np.isfinite(window[0]) and np.isfinite(window[1])) or window[0] >= window[1]:
            raise ValueError(f"window must satisfy t_start < t_end, got {window}")
        return window

    def model_post_init(self, __context) -> None:
        if not self.band_declared:
            for atom in self.atoms:
                band = 2.0 * np.pi * atom.rate if atom.kind == "sinc" else atom.angular_frequency
                if band > self.omega0 * (1.0 + 1e-12):
                    raise ValueError(f"atom band {band:.6g} rad/s exceeds omega0 {self.omega0:.6g} rad/s")

        sincs = [a for a in self.atoms if a.kind == "sinc"]
        cosines = [a for a in self.atoms if a.kind == "cosine"]
        self._sinc = {
            "amplitude": np.array([a.amplitude for a in sincs], dtype=float),
            "center": np.array([a.center for a in sincs], dtype=float),
            "rate2": np.array([2.0 * a.rate for a in sincs], dtype=float),
        }
        self._cosine = {
            "amplitude": np.array([a.amplitude for a in cosines], dtype=float),
            "omega": np.array([a.angular_frequency for a in cosines], dtype=float),
            "phase": np.array([a.phase for a in cosines], dtype=float),
        }

    @property
    def t_start(self) -> float:
        return self.window[0]

    @property
    def t_end(self) -> float:
        return self.window[1]

    @property
    def duration(self) -> float:
        return self.window[1] - self.window[0]

    @property
    def nyquist_interval(self) -> float:
        """T_Nyq = pi / omega0."""
        return np.pi / self.omega0

    @property
    def nyquist_count(self) -> int:
        """Number of uniform Nyquist-rate samples in the half-open window."""
        return int(np.floor(self.duration / self.nyquist_interval + 1e-9))

    @property
    def identifier(self) -> str:
        """Content hash used to match encodings to their source signal."""
        if self._identifier is None:
            payload = self.model_dump_json(exclude={"name"})
            self._identifier = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
        return self._identifier

    def derivatives(self, t, order: int = 2) -> Tuple[np.ndarray, ...]:
        """
        Evaluate the signal and its derivatives in closed form.

        Args:
            t: Scalar or array of instants in seconds
            order: Highest derivative to return (0 to 4)

        Returns:
            Tuple of arrays (f, f', f'', ...) truncated to the requested order
        """
        if not 0 <= order <= MAX_DERIVATIVE:
            raise ParameterError(f"derivative order must lie in [0, {MAX_DERIVATIVE}], got {order}")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        outputs = [np.full(t.shape, self.offset, dtype=float)]
        outputs += [np.zeros(t.shape, dtype=float) for _ in range(order)]

        amp, center, rate2 = self._sinc["amplitude"], self._sinc["center"], self._sinc["rate2"]
        if amp.size:
            step = max(1, _CHUNK_ELEMENTS // amp.size)
            for start in range(0, t.size, step):
                block = slice(start, start + step)
                x = rate2[None, :] * (t[block, None] - center[None, :])
                for k, s_k in enumerate(sinc_derivatives(x, order)):
                    outputs[k][block] += s_k @ (amp * rate2 ** k)

        amp, omega, phase = self._cosine["amplitude"], self._cosine["omega"], self._cosine["phase"]
        if amp.size:
            arg = t[:, None] * omega[None, :] + phase[None, :]
            cos_arg, sin_arg = np.cos(arg), np.sin(arg)
            # d^k/dt^k cos(arg) cycles through cos, -sin, -cos, sin
            cycle = (cos_arg, -sin_arg, -cos_arg, sin_arg)
            for k in range(order + 1):
                outputs[k] += cycle[k % 4] @ (amp * omega ** k)

        return tuple(outputs)

    def value(self, t) -> np.ndarray:
        return self.derivatives(t, order=0)[0]

    def derivative(self, t) -> np.ndarray:
        return self.derivatives(t, order=1)[1]

    def fine_grid(self, oversample: int = 64):
        """Return the cached quadrature grid with `oversample` nodes per Nyquist interval."""
        grid = self._grids.get(oversample)
        if grid is None:
            from src.signals.grid import FineGrid
            grid = FineGrid(self, oversample)
            self._grids[oversample] = grid
        return grid

    def check_inside(self, t_a: float, t_b: float) -> None:
        """Raise DomainError unless t_start <= t_a <= t_b <= t_end (up to rounding)."""
        slack = 1e-12 * self.duration
        if t_a > t_b or t_a < self.t_start - slack or t_b > self.t_end + slack:
            raise DomainError(f"interval [{t_a:.12g}, {t_b:.12g}] is not inside window {self.window}")

    def with_offset(self, offset: float) -> "BandlimitedSignal":
        # model_copy would share the private grid cache
        return BandlimitedSignal(**{**self.model_dump(), "offset": offset})

    def scaled(self, factor: float) -> "BandlimitedSignal":
        """Multiply every atom amplitude (not the offset) by factor."""
        atoms = [a.model_copy(update={"amplitude": a.amplitude * factor}) for a in self.atoms]
        return BandlimitedSignal(
            atoms=atoms, offset=self.offset, omega0=self.omega0, amp_bound=self.amp_bound,
            window=self.window, name=self.name, scale=self.scale * factor,
            band_declared=self.band_declared,
        )

    def describe(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "identifier": self.identifier,
            "omega0": self.omega0,
            "amp_bound": self.amp_bound,
            "window": list(self.window),
            "atoms": len(self.atoms),
        }


def build_signal(**kwargs) -> BandlimitedSignal:
    """Construct a BandlimitedSignal, reporting validation failures as ParameterError."""
    try:
        return BandlimitedSignal(**kwargs)
    except ValueError as e:
        raise ParameterError(str(e)) from e


def eval_signal(signal: BandlimitedSignal, t):
    """f(t) in closed form; scalar in, scalar out."""
    values = signal.value(t)
    return float(values[0]) if np.ndim(t) == 0 else values


def eval_derivative(signal: BandlimitedSignal, t):
    """f'(t) in closed form; scalar in, scalar out."""
    values = signal.derivative(t)
    return float(values[0]) if np.ndim(t) == 0 else values


def energy_integrals(signal: BandlimitedSignal, t_a: float, t_b: float, shift: float = 0.0,
                     oversample: int = 64) -> EnergyPair:
    """
    Energies of the shifted signal and of its derivative over [t_a, t_b].

    Args:
        signal: Signal to integrate
        t_a: Lower limit (inside the window)
        t_b: Upper limit (inside the window, >= t_a)
        shift: Constant s added to the signal in the first integral
        oversample: Fine-grid points per Nyquist interval

    Returns:
        EnergyPair(e = int |f + s|^2, d = int |f'|^2)
    """
    signal.check_inside(t_a, t_b)
    if t_a == t_b:
        return EnergyPair(e=0.0, d=0.0)
    grid = signal.fine_grid(oversample)
    e = grid.cumulative_at("energy", t_b, shift) - grid.cumulative_at("energy", t_a, shift)
    d = grid.cumulative_at("derivative_energy", t_b) - grid.cumulative_at("derivative_energy", t_a)
    return EnergyPair(e=max(e, 0.0), d=max(d, 0.0))
